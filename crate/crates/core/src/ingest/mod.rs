//! Feed ingestion, snippet extraction, PII scrubbing and corpus consolidation.

mod config;
mod consolidate;
mod feed;
mod keywords;
mod pii;
mod record;
mod run;
mod snippet;

pub use config::{FeedSource, FeedsFile};
pub use consolidate::{consolidate, ConsolidationReport, IngestConfig};
pub use feed::{fetch_feed, fetch_feeds, parse_feed, ArticleFlag, RawArticle};
pub use keywords::{assign_keyword_group, KeywordGroup};
pub use pii::{contains_pii, scrub_pii, EMAIL_PLACEHOLDER, URL_PLACEHOLDER, USER_PLACEHOLDER};
pub use record::{read_corpus, record_id_for_link, write_corpus, write_csv, ConsolidatedRecord};
pub use run::{ingest, FeedFailure, IngestSummary};
pub use snippet::{extract_snippet, split_sentences};

use crate::Label;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("transport error fetching {url}: {message}")]
    Transport { url: String, message: String },
    #[error("feed parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("upstream returned HTTP {status} for {url}")]
    Upstream { url: String, status: u16 },
    #[error("input text is empty")]
    EmptyInput,
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("invalid URL {0:?}")]
    InvalidUrl(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid record {id:?}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IngestError {
    /// Transport failures may succeed on retry; everything else is final.
    pub fn is_retriable(&self) -> bool {
        matches!(self, IngestError::Transport { .. })
    }
}

/// Options for turning fetched articles into corpus records.
#[derive(Debug, Clone)]
pub struct ArticleOptions {
    pub max_sentences: usize,
    /// Use the title when a feed entry carries no body text instead of skipping it.
    pub title_fallback: bool,
}

impl Default for ArticleOptions {
    fn default() -> Self {
        ArticleOptions { max_sentences: 5, title_fallback: false }
    }
}

/// Outcome of [`articles_to_records`].
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ArticleConversion {
    pub records: Vec<ConsolidatedRecord>,
    /// Links of entries skipped for lacking body text.
    pub skipped_empty: Vec<String>,
    /// Links of entries that had no publication date.
    pub undated: Vec<String>,
}

/// Snippet, scrub and categorize fetched articles.
///
/// `default_group` is used when no keyword of any group occurs in the text
/// (normally the group whose query produced the feed).
pub fn articles_to_records(
    articles: &[RawArticle],
    groups: &[KeywordGroup],
    default_group: Option<&str>,
    opts: &ArticleOptions,
) -> ArticleConversion {
    let mut out = ArticleConversion::default();
    for article in articles {
        if article.published_at.is_none() {
            out.undated.push(article.link.clone());
        }
        let body = if article.body_text.trim().is_empty() && opts.title_fallback {
            article.title.as_str()
        } else {
            article.body_text.as_str()
        };
        let snippet = match extract_snippet(body, opts.max_sentences) {
            Ok(s) => s,
            Err(_) => {
                out.skipped_empty.push(article.link.clone());
                continue;
            }
        };
        let text = scrub_pii(&snippet);
        let keyword_group = if groups.is_empty() {
            None
        } else {
            assign_keyword_group(&text, groups)
        }
        .or_else(|| default_group.map(str::to_owned));
        out.records.push(ConsolidatedRecord {
            id: record_id_for_link(&article.link),
            dataset: article.source_name(),
            text,
            label: None,
            url: Some(article.link.clone()),
            published_at: article.published_at,
            keyword_group,
        });
    }
    if !out.skipped_empty.is_empty() {
        tracing::warn!(count = out.skipped_empty.len(), "skipped feed entries without body text");
    }
    out
}

/// Scrub benchmark-sourced records and drop those left empty.
pub fn prepare_benchmark(records: Vec<ConsolidatedRecord>) -> (Vec<ConsolidatedRecord>, usize) {
    let before = records.len();
    let kept: Vec<_> = records
        .into_iter()
        .filter_map(|mut r| {
            r.text = scrub_pii(r.text.trim());
            (!r.text.is_empty()).then_some(r)
        })
        .collect();
    let dropped = before - kept.len();
    if dropped > 0 {
        tracing::warn!(dropped, "dropped benchmark records with empty text");
    }
    (kept, dropped)
}

/// Labels of a corpus, failing on the first unlabeled record.
pub fn labels_of(records: &[ConsolidatedRecord]) -> Result<Vec<Label>, IngestError> {
    records
        .iter()
        .map(|r| {
            r.label.ok_or_else(|| IngestError::InvalidRecord {
                id: r.id.clone(),
                reason: "record is unlabeled".into(),
            })
        })
        .collect()
}
