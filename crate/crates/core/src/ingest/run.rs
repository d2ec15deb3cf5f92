use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    articles_to_records, consolidate, fetch_feeds, prepare_benchmark, ArticleOptions, ConsolidatedRecord,
    ConsolidationReport, FeedsFile, IngestConfig, IngestError,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedFailure {
    pub url: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub consolidation: ConsolidationReport,
    pub feeds_ok: usize,
    pub feed_failures: Vec<FeedFailure>,
    pub skipped_empty: Vec<String>,
    pub undated: Vec<String>,
    pub benchmark_dropped_empty: usize,
}

/// Fetch every configured feed, convert entries to records, and consolidate
/// them with the benchmark records. A failing feed is reported and skipped;
/// an empty result is an error.
pub fn ingest(
    feeds: &FeedsFile,
    benchmark: Vec<ConsolidatedRecord>,
    config: &IngestConfig,
    opts: &ArticleOptions,
    timeout: Duration,
) -> Result<(Vec<ConsolidatedRecord>, IngestSummary), IngestError> {
    config.validate()?;
    let mut summary = IngestSummary::default();
    let opts = ArticleOptions { max_sentences: config.max_sentences, ..opts.clone() };
    let mut curated = Vec::new();
    for fetch in fetch_feeds(&feeds.feeds, timeout) {
        match fetch.result {
            Ok(articles) => {
                summary.feeds_ok += 1;
                let conv = articles_to_records(&articles, &feeds.groups, fetch.source.group.as_deref(), &opts);
                curated.extend(conv.records);
                summary.skipped_empty.extend(conv.skipped_empty);
                summary.undated.extend(conv.undated);
            }
            Err(e) => {
                tracing::warn!(url = %fetch.source.url, error = %e, "feed fetch failed");
                summary.feed_failures.push(FeedFailure { url: fetch.source.url.clone(), error: e.to_string() });
            }
        }
    }
    let (benchmark, dropped) = prepare_benchmark(benchmark);
    summary.benchmark_dropped_empty = dropped;
    let (corpus, report) = consolidate(&curated, &benchmark, config)?;
    summary.consolidation = report;
    if corpus.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    Ok((corpus, summary))
}
