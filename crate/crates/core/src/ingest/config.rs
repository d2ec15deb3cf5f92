//! Feeds/keyword-group configuration file (TOML).
//!
//! ```toml
//! [[group]]
//! id = "elections"
//! name = "Elections"
//! keywords = ["election", "ballot", "vote"]
//!
//! [[feed]]
//! url = "https://news.google.com/rss/search?q=election"
//! group = "elections"
//!
//! [[feed]]
//! url = "fixtures/local.xml"   # relative paths resolve against this file
//! group = "elections"
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use super::{IngestError, KeywordGroup};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSource {
    /// `http(s)://` or `file://` URL.
    pub url: String,
    /// Keyword group the feed was queried for.
    pub group: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedsFile {
    #[serde(default, rename = "group")]
    pub groups: Vec<KeywordGroup>,
    #[serde(default, rename = "feed")]
    pub feeds: Vec<FeedSource>,
}

impl FeedsFile {
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, IngestError> {
        let mut file: FeedsFile = toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        for g in &mut file.groups {
            g.keywords = g.keywords.iter().map(|k| k.trim().to_lowercase()).collect();
        }
        for f in &mut file.feeds {
            f.url = resolve_feed_url(&f.url, base_dir)?;
        }
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p });
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut ids = HashSet::new();
        for g in &self.groups {
            g.validate()?;
            if !ids.insert(g.id.as_str()) {
                return Err(IngestError::Config(format!("duplicate keyword group id {:?}", g.id)));
            }
        }
        for f in &self.feeds {
            if let Some(gid) = &f.group {
                if !ids.contains(gid.as_str()) {
                    return Err(IngestError::Config(format!("feed {} references unknown group {gid:?}", f.url)));
                }
            }
        }
        Ok(())
    }
}

fn resolve_feed_url(raw: &str, base_dir: Option<&Path>) -> Result<String, IngestError> {
    if let Ok(u) = Url::parse(raw) {
        if matches!(u.scheme(), "http" | "https" | "file") {
            return Ok(u.into());
        }
    }
    let path = Path::new(raw);
    let path = match base_dir {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    };
    let abs = std::path::absolute(&path)?;
    Url::from_file_path(&abs)
        .map(Into::into)
        .map_err(|_| IngestError::InvalidUrl(raw.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_groups_and_resolves_paths() {
        let text = r#"
[[group]]
id = "race"
name = "Race/ethnicity"
keywords = ["Civil Rights", "immigrant"]

[[feed]]
url = "https://news.google.com/rss/search?q=immigrant"
group = "race"

[[feed]]
url = "local/feed.xml"
"#;
        let f = FeedsFile::parse(text, Some(Path::new("/data"))).unwrap();
        assert_eq!(f.groups[0].keywords, vec!["civil rights", "immigrant"]);
        assert_eq!(f.feeds[1].url, "file:///data/local/feed.xml");
        assert!(f.feeds[0].url.starts_with("https://"));
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_groups() {
        let dup = "[[group]]\nid='a'\nname='A'\nkeywords=['x']\n[[group]]\nid='a'\nname='B'\nkeywords=['y']\n";
        assert!(matches!(FeedsFile::parse(dup, None), Err(IngestError::Config(_))));
        let unknown = "[[feed]]\nurl='https://x.org/f'\ngroup='nope'\n";
        assert!(matches!(FeedsFile::parse(unknown, None), Err(IngestError::Config(_))));
        let empty_kw = "[[group]]\nid='a'\nname='A'\nkeywords=[' ']\n";
        assert!(FeedsFile::parse(empty_kw, None).is_err());
    }
}
