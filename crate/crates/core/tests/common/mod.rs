#![allow(dead_code)]

pub mod oracles;

use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use newsbench_core::eval::{render_report, ReportFormat, RenderOptions};
use newsbench_core::ingest::{self, read_corpus, ArticleOptions, FeedsFile, IngestConfig};
use newsbench_core::jsonl;
use newsbench_core::labeling::{
    apply_scripted_reviews, export_labeled_corpus, suggest_label, Annotator, ExportOptions, ExportOutcome, PromptTemplate,
    ScriptedDecision, StubClient, WorkflowStore,
};
use newsbench_core::pipeline::{run_benchmark, BenchmarkConfig, BenchmarkRun};
use newsbench_core::synthetic::write_workflow_fixture;

pub const SEED: u64 = 7;

pub struct WorkflowRun {
    pub corpus_size: usize,
    pub export: ExportOutcome,
    pub benchmark: BenchmarkRun,
    pub leaderboard_json: String,
}

pub fn fixed_time() -> DateTime<Utc> {
    "2024-07-15T12:00:00Z".parse().unwrap()
}

/// Fixtures → ingest → stub suggestions → assignment → scripted reviews →
/// gated export → benchmark of every hub model.
pub fn full_workflow(dir: &Path) -> WorkflowRun {
    let fx = write_workflow_fixture(&dir.join("fixture"), SEED).unwrap();
    let feeds = FeedsFile::load(&fx.feeds).unwrap();
    let benchmark = read_corpus(&fx.benchmark).unwrap();
    let cfg = IngestConfig::new(fx.window_start, fx.window_end);
    let (corpus, _) = ingest::ingest(&feeds, benchmark, &cfg, &ArticleOptions::default(), Duration::from_secs(5)).unwrap();

    let store = WorkflowStore::open(dir.join("store")).unwrap();
    store.add_records(corpus.clone()).unwrap();
    let client = StubClient::from_file(&fx.llm_responses).unwrap();
    for r in &corpus {
        let s = suggest_label(r, &client, &PromptTemplate::default(), fixed_time()).unwrap();
        store.record_suggestion(s).unwrap();
    }
    let annotators: Vec<Annotator> = jsonl::read(&fx.annotators).unwrap();
    store.register_annotators(annotators).unwrap();
    store.assign(SEED).unwrap();
    let script: Vec<ScriptedDecision> = jsonl::read(&fx.reviews).unwrap();
    let applied = apply_scripted_reviews(&store, &script, fixed_time()).unwrap();
    assert!(applied.unscripted.is_empty(), "{:?}", applied.unscripted);

    let snap = store.snapshot();
    let labeled_path = dir.join("labeled.jsonl");
    let export = export_labeled_corpus(
        snap.records(),
        &snap.adjudications().unwrap(),
        &snap.agreement(),
        &ExportOptions::default(),
        &labeled_path,
    )
    .unwrap();
    let labeled = read_corpus(&labeled_path).unwrap();
    let benchmark = run_benchmark(&labeled, &BenchmarkConfig::new(SEED)).unwrap();
    let leaderboard_json = render_report(&benchmark.leaderboard, ReportFormat::Json, &RenderOptions::default()).unwrap();
    WorkflowRun { corpus_size: corpus.len(), export, benchmark, leaderboard_json }
}
