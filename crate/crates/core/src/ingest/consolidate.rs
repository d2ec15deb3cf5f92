use std::cmp::Ordering;
use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ConsolidatedRecord, IngestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub max_sentences: usize,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub benchmark_limit: usize,
}

impl IngestConfig {
    pub fn new(window_start: DateTime<Utc>, window_end: DateTime<Utc>) -> Self {
        IngestConfig { max_sentences: 5, window_start, window_end, benchmark_limit: 5000 }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.window_start >= self.window_end {
            return Err(IngestError::Config("window_start must precede window_end".into()));
        }
        if self.max_sentences == 0 || self.benchmark_limit == 0 {
            return Err(IngestError::Config("max_sentences and benchmark_limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsolidationReport {
    pub curated_in: usize,
    pub benchmark_in: usize,
    pub outside_window: usize,
    pub benchmark_truncated: usize,
    pub duplicates: usize,
    pub id_collisions: usize,
}

/// Merge curated and benchmark records into one corpus.
///
/// Benchmark records are sorted chronologically (undated ones last, stable)
/// and truncated to the configured limit; curated records must fall inside
/// the window (undated curated records are excluded). Duplicates by
/// normalized text and repeated ids keep the first occurrence, curated first.
pub fn consolidate(
    curated: &[ConsolidatedRecord],
    benchmark: &[ConsolidatedRecord],
    config: &IngestConfig,
) -> Result<(Vec<ConsolidatedRecord>, ConsolidationReport), IngestError> {
    config.validate()?;
    let mut report = ConsolidationReport {
        curated_in: curated.len(),
        benchmark_in: benchmark.len(),
        ..Default::default()
    };

    let in_window: Vec<&ConsolidatedRecord> = curated
        .iter()
        .filter(|r| r.published_at.is_some_and(|t| t >= config.window_start && t <= config.window_end))
        .collect();
    report.outside_window = curated.len() - in_window.len();

    let mut bench: Vec<&ConsolidatedRecord> = benchmark.iter().collect();
    bench.sort_by(|a, b| match (a.published_at, b.published_at) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
    report.benchmark_truncated = bench.len().saturating_sub(config.benchmark_limit);
    bench.truncate(config.benchmark_limit);

    let mut seen_text = HashSet::new();
    let mut seen_id = HashSet::new();
    let mut out = Vec::with_capacity(in_window.len() + bench.len());
    for r in in_window.into_iter().chain(bench) {
        if !seen_text.insert(dedup_key(&r.text)) {
            report.duplicates += 1;
            continue;
        }
        if !seen_id.insert(r.id.as_str()) {
            report.id_collisions += 1;
            continue;
        }
        out.push(r.clone());
    }
    if out.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    Ok((out, report))
}

/// Lowercased text with whitespace runs collapsed to single spaces.
pub(crate) fn dedup_key(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}
