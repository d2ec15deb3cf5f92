//! Job bodies shared by the CLI and the HTTP job runner.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use newsbench_core::eval::{
    leaderboard, render_report, score_predictions, EvalError, Leaderboard, RenderOptions, ReportFormat,
};
use newsbench_core::ingest::{
    self, labels_of, read_corpus, write_corpus, ArticleOptions, ConsolidatedRecord, FeedsFile, IngestConfig, IngestError,
    IngestSummary,
};
use newsbench_core::jsonl::JsonlError;
use newsbench_core::labeling::{
    suggest_label, ChatCompletionClient, CompletionClient, LabelError, LabelSuggestion, PromptTemplate, StubClient,
};
use newsbench_core::models::{import_external_predictions, Hyperparameters, ModelError, ModelKind, TrainedModel};
use newsbench_core::pipeline::{run_benchmark, train_on_corpus, BenchmarkConfig, HyperparameterOverride, PipelineError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::LlmConfig;

pub const DEFAULT_SEED: u64 = 7;
const SUGGEST_ATTEMPTS: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    /// Bad parameters; nothing was attempted.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_min_df() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestParams {
    pub feeds: PathBuf,
    #[serde(default)]
    pub benchmark: Option<PathBuf>,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub max_sentences: Option<usize>,
    /// Use titles for entries without body text instead of skipping them.
    #[serde(default)]
    pub title_fallback: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    30
}

impl IngestParams {
    pub fn config(&self) -> Result<IngestConfig, TaskError> {
        let mut cfg = IngestConfig::new(self.window_start, self.window_end);
        if let Some(l) = self.limit {
            cfg.benchmark_limit = l;
        }
        if let Some(m) = self.max_sentences {
            cfg.max_sentences = m;
        }
        cfg.validate().map_err(|e| TaskError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

pub fn run_ingest(p: &IngestParams) -> Result<(Vec<ConsolidatedRecord>, IngestSummary), TaskError> {
    let cfg = p.config()?;
    let feeds = FeedsFile::load(&p.feeds)?;
    let benchmark = match &p.benchmark {
        Some(path) => read_corpus(path)?,
        None => Vec::new(),
    };
    let opts = ArticleOptions { title_fallback: p.title_fallback, ..ArticleOptions::default() };
    Ok(ingest::ingest(&feeds, benchmark, &cfg, &opts, Duration::from_secs(p.timeout_secs))?)
}

/// Canned responses when configured, otherwise the chat-completion endpoint.
pub fn completion_client(llm: &LlmConfig) -> Result<Box<dyn CompletionClient>, TaskError> {
    if let Some(path) = &llm.stub_responses {
        return Ok(Box::new(StubClient::from_file(path)?));
    }
    let key = std::env::var(ChatCompletionClient::ENV_API_KEY)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| TaskError::Invalid(format!("no stub responses configured and {} is not set", ChatCompletionClient::ENV_API_KEY)))?;
    let model = llm.model.clone().ok_or_else(|| TaskError::Invalid("no LLM model configured".into()))?;
    let base = llm.base_url.clone().unwrap_or_else(|| "https://api.openai.com/v1".into());
    Ok(Box::new(ChatCompletionClient::new(base, key, model)))
}

pub fn prompt_template(llm: &LlmConfig) -> Result<PromptTemplate, TaskError> {
    match &llm.prompt_file {
        Some(p) => Ok(PromptTemplate::new(std::fs::read_to_string(p)?)?),
        None => Ok(PromptTemplate::default()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestFailure {
    pub record_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestOutcome {
    pub suggestions: Vec<LabelSuggestion>,
    /// Records left unsuggested (transport errors after retries, or no verdict).
    pub failures: Vec<SuggestFailure>,
}

/// Ask the model about every record; transport errors are retried.
pub fn suggest_all(
    records: &[ConsolidatedRecord],
    client: &dyn CompletionClient,
    prompt: &PromptTemplate,
    at: DateTime<Utc>,
) -> SuggestOutcome {
    let mut out = SuggestOutcome::default();
    for r in records {
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            match suggest_label(r, client, prompt, at) {
                Err(e) if e.is_retriable() && attempt < SUGGEST_ATTEMPTS => {
                    std::thread::sleep(Duration::from_millis(250 * u64::from(attempt)));
                }
                other => break other,
            }
        };
        match result {
            Ok(s) => out.suggestions.push(s),
            Err(e) => {
                tracing::warn!(record = %r.id, error = %e, "no suggestion");
                out.failures.push(SuggestFailure { record_id: r.id.clone(), error: e.to_string() });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    pub model: String,
    pub corpus: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub max_features: Option<usize>,
    /// Hyperparameter overrides by name, e.g. `{"c": 0.5}`.
    #[serde(default)]
    pub overrides: BTreeMap<String, Value>,
}

fn raw_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl TrainParams {
    pub fn kind(&self) -> Result<ModelKind, TaskError> {
        ModelKind::from_str(&self.model).map_err(|e| TaskError::Invalid(e.to_string()))
    }

    pub fn hyperparameters(&self) -> Result<Hyperparameters, TaskError> {
        let mut hp = Hyperparameters::defaults(self.kind()?, self.seed);
        for (name, value) in &self.overrides {
            hp = hp.with_override(name, &raw_value(value)).map_err(|e| TaskError::Invalid(e.to_string()))?;
        }
        Ok(hp)
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        self.hyperparameters()?;
        if self.min_df == 0 {
            return Err(TaskError::Invalid("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn run_train(p: &TrainParams, at: Option<DateTime<Utc>>) -> Result<TrainedModel, TaskError> {
    let hp = p.hyperparameters()?;
    let records = read_corpus(&p.corpus)?;
    let mut model = train_on_corpus(&records, &hp, p.min_df, p.max_features)?;
    model.metadata.trained_at = at;
    Ok(model)
}

/// Either score prediction files against a labeled corpus, or benchmark the
/// hub on a labeled corpus with a seeded split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateParams {
    #[serde(default)]
    pub truth: Option<PathBuf>,
    #[serde(default)]
    pub predictions: Vec<PathBuf>,
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub models: Option<Vec<String>>,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default = "default_true")]
    pub include_tn: bool,
}

impl EvaluateParams {
    pub fn validate(&self) -> Result<(), TaskError> {
        match (&self.truth, self.predictions.is_empty(), &self.corpus) {
            (Some(_), false, None) => Ok(()),
            (None, true, Some(_)) => self.kinds().map(|_| ()),
            _ => Err(TaskError::Invalid("give either truth plus predictions, or a corpus to benchmark".into())),
        }
    }

    pub fn kinds(&self) -> Result<Vec<ModelKind>, TaskError> {
        match &self.models {
            None => Ok(ModelKind::ALL.to_vec()),
            Some(names) => names.iter().map(|n| ModelKind::from_str(n).map_err(|e| TaskError::Invalid(e.to_string()))).collect(),
        }
    }
}

pub fn score_prediction_files(truth: &Path, predictions: &[PathBuf]) -> Result<Leaderboard, TaskError> {
    let records = read_corpus(truth)?;
    let labels = labels_of(&records)?;
    let by_id: HashMap<String, _> = records.iter().map(|r| r.id.clone()).zip(labels).collect();
    let ids: HashSet<String> = by_id.keys().cloned().collect();
    let mut reports = Vec::new();
    for path in predictions {
        let p = import_external_predictions(path, Some(&ids), true)?;
        reports.push(score_predictions(&by_id, &p.rows, &p.model_name)?);
    }
    Ok(leaderboard(reports)?)
}

pub fn run_evaluate(p: &EvaluateParams) -> Result<Leaderboard, TaskError> {
    p.validate()?;
    if let Some(truth) = &p.truth {
        return score_prediction_files(truth, &p.predictions);
    }
    let corpus = p.corpus.as_ref().expect("validated");
    let records = read_corpus(corpus)?;
    let mut cfg = BenchmarkConfig::new(p.seed);
    cfg.kinds = p.kinds()?;
    cfg.min_df = p.min_df;
    Ok(run_benchmark(&records, &cfg)?.leaderboard)
}

pub fn parse_overrides(pairs: &[String]) -> Result<Vec<(String, String)>, TaskError> {
    pairs
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| TaskError::Invalid(format!("override {s:?} is not name=value")))
        })
        .collect()
}

pub fn overrides_for(kind: ModelKind, pairs: &[(String, String)]) -> Vec<HyperparameterOverride> {
    pairs.iter().map(|(name, value)| HyperparameterOverride { kind, name: name.clone(), value: value.clone() }).collect()
}

/// Write `<stem>.json` and `<stem>.md`; returns the JSON path.
pub fn write_reports(lb: &Leaderboard, dir: &Path, stem: &str, include_tn: bool) -> Result<PathBuf, TaskError> {
    std::fs::create_dir_all(dir)?;
    let opts = RenderOptions { include_tn, ..RenderOptions::default() };
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&json, render_report(lb, ReportFormat::Json, &opts)?)?;
    std::fs::write(dir.join(format!("{stem}.md")), render_report(lb, ReportFormat::Markdown, &opts)?)?;
    Ok(json)
}

pub fn write_records(path: &Path, records: &[ConsolidatedRecord]) -> Result<(), TaskError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(write_corpus(path, records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_params_validation() {
        let p: TrainParams = serde_json::from_value(serde_json::json!({"model": "knn", "corpus": "c.jsonl", "overrides": {"k": 3}})).unwrap();
        assert_eq!(p.hyperparameters().unwrap().values()["k"], 3);
        let bad: TrainParams = serde_json::from_value(serde_json::json!({"model": "svm_rbf", "corpus": "c"})).unwrap();
        assert!(matches!(bad.validate(), Err(TaskError::Invalid(_))));
        assert!(serde_json::from_value::<TrainParams>(serde_json::json!({"model": "knn", "corpus": "c", "x": 1})).is_err());
    }

    #[test]
    fn evaluate_modes_are_exclusive() {
        let both: EvaluateParams =
            serde_json::from_value(serde_json::json!({"truth": "t", "predictions": ["p"], "corpus": "c"})).unwrap();
        assert!(both.validate().is_err());
        let bench: EvaluateParams = serde_json::from_value(serde_json::json!({"corpus": "c", "models": ["knn"]})).unwrap();
        bench.validate().unwrap();
    }

    #[test]
    fn override_pairs() {
        assert_eq!(parse_overrides(&["c=0.5".into()]).unwrap(), vec![("c".to_string(), "0.5".to_string())]);
        assert!(parse_overrides(&["c".into()]).is_err());
    }
}
