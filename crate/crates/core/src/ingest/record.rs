use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{contains_pii, IngestError};
use crate::{jsonl, Label};

/// One news item in the unified corpus schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsolidatedRecord {
    pub id: String,
    /// Source tag: publisher or benchmark dataset name.
    pub dataset: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub published_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub keyword_group: Option<String>,
}

impl ConsolidatedRecord {
    pub fn new(id: impl Into<String>, dataset: impl Into<String>, text: impl Into<String>) -> Self {
        ConsolidatedRecord {
            id: id.into(),
            dataset: dataset.into(),
            text: text.into(),
            label: None,
            url: None,
            published_at: None,
            keyword_group: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_published_at(mut self, at: DateTime<Utc>) -> Self {
        self.published_at = Some(at);
        self
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |reason: &str| IngestError::InvalidRecord { id: self.id.clone(), reason: reason.into() };
        if self.id.trim().is_empty() {
            return Err(bad("empty id"));
        }
        if self.text.trim().is_empty() {
            return Err(bad("empty text"));
        }
        if contains_pii(&self.text) {
            return Err(bad("text contains unscrubbed PII"));
        }
        if let Some(u) = &self.url {
            url::Url::parse(u).map_err(|_| bad("url is not a valid URL"))?;
        }
        Ok(())
    }
}

/// Stable record id derived from an article link.
pub fn record_id_for_link(link: &str) -> String {
    let digest = Sha256::digest(link.as_bytes());
    format!("rss-{}", &hex::encode(digest)[..16])
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<ConsolidatedRecord>, IngestError> {
    Ok(jsonl::read(path)?)
}

pub fn write_corpus(path: impl AsRef<Path>, records: &[ConsolidatedRecord]) -> Result<(), IngestError> {
    Ok(jsonl::write(path, records)?)
}

/// CSV with the `Dataset,Text,Label` consolidation columns; unlabeled rows
/// leave `Label` empty.
pub fn write_csv<W: std::io::Write>(out: W, records: &[ConsolidatedRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["Dataset", "Text", "Label"])?;
    for r in records {
        let label = r.label.map(|l| l.to_string()).unwrap_or_default();
        w.write_record([r.dataset.as_str(), r.text.as_str(), label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
