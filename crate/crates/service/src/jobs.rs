//! Background jobs: bounded concurrency, idempotent submission, and one
//! training run at a time per model kind.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use newsbench_core::labeling::WorkflowStore;
use newsbench_core::models::ModelKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Semaphore;

use crate::config::LlmConfig;
use crate::tasks::{self, EvaluateParams, IngestParams, TaskError, TrainParams};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Ingest,
    Suggest,
    Train,
    Evaluate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    pub created_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at: Option<DateTime<Utc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<DateTime<Utc>>,
}

/// Suggest provisional labels for records in the store.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestParams {
    /// Restrict to these records; all records otherwise.
    #[serde(default)]
    pub record_ids: Option<Vec<String>>,
    /// Ask again for records that already have a suggestion.
    #[serde(default)]
    pub overwrite: bool,
}

#[derive(Debug, Clone)]
enum JobParams {
    Ingest(IngestParams),
    Suggest(SuggestParams),
    Train(TrainParams),
    Evaluate(EvaluateParams),
}

impl JobParams {
    fn parse(kind: JobKind, params: &Value) -> Result<Self, TaskError> {
        fn typed<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, TaskError> {
            serde_json::from_value(v.clone()).map_err(|e| TaskError::Invalid(format!("bad job parameters: {e}")))
        }
        let params = if params.is_null() { &Value::Object(Default::default()) } else { params };
        let parsed = match kind {
            JobKind::Ingest => {
                let p: IngestParams = typed(params)?;
                p.config()?;
                JobParams::Ingest(p)
            }
            JobKind::Suggest => JobParams::Suggest(typed(params)?),
            JobKind::Train => {
                let p: TrainParams = typed(params)?;
                p.validate()?;
                JobParams::Train(p)
            }
            JobKind::Evaluate => {
                let p: EvaluateParams = typed(params)?;
                p.validate()?;
                JobParams::Evaluate(p)
            }
        };
        Ok(parsed)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error(transparent)]
    Invalid(#[from] TaskError),
    #[error("idempotency key {0:?} was already used for a different request")]
    KeyReused(String),
}

#[derive(Default)]
struct Table {
    jobs: HashMap<String, JobRecord>,
    by_key: HashMap<String, String>,
    next: u64,
}

/// Shared resources a job may touch.
#[derive(Clone)]
pub struct JobContext {
    pub store: Arc<WorkflowStore>,
    pub artifact_dir: PathBuf,
    pub llm: LlmConfig,
    pub clock: Clock,
}

pub struct JobManager {
    table: Mutex<Table>,
    permits: Arc<Semaphore>,
    train_locks: HashMap<ModelKind, Arc<tokio::sync::Mutex<()>>>,
    ctx: JobContext,
}

impl JobManager {
    pub fn new(ctx: JobContext, workers: usize) -> Self {
        JobManager {
            table: Mutex::new(Table::default()),
            permits: Arc::new(Semaphore::new(workers.max(1))),
            train_locks: ModelKind::ALL.into_iter().map(|k| (k, Arc::default())).collect(),
            ctx,
        }
    }

    pub fn get(&self, job_id: &str) -> Option<JobRecord> {
        self.table.lock().expect("job table poisoned").jobs.get(job_id).cloned()
    }

    /// Queue a job. Returns the record and whether it was newly created; a
    /// repeated idempotency key with the same request returns the first job.
    pub fn submit(
        self: &Arc<Self>,
        kind: JobKind,
        params: Value,
        idempotency_key: Option<String>,
    ) -> Result<(JobRecord, bool), JobError> {
        let parsed = JobParams::parse(kind, &params)?;
        let record = {
            let mut t = self.table.lock().expect("job table poisoned");
            if let Some(key) = &idempotency_key {
                if let Some(existing) = t.by_key.get(key).and_then(|id| t.jobs.get(id)) {
                    if existing.kind == kind && existing.params == params {
                        return Ok((existing.clone(), false));
                    }
                    return Err(JobError::KeyReused(key.clone()));
                }
            }
            t.next += 1;
            let job_id = format!("job-{:06}", t.next);
            let record = JobRecord {
                job_id: job_id.clone(),
                kind,
                state: JobState::Queued,
                params,
                result_path: None,
                summary: None,
                error: None,
                idempotency_key: idempotency_key.clone(),
                created_at: (self.ctx.clock)(),
                started_at: None,
                finished_at: None,
            };
            if let Some(key) = idempotency_key {
                t.by_key.insert(key, job_id.clone());
            }
            t.jobs.insert(job_id, record.clone());
            record
        };
        let this = Arc::clone(self);
        let job_id = record.job_id.clone();
        tokio::spawn(async move { this.execute(job_id, parsed).await });
        Ok((record, true))
    }

    fn update(&self, job_id: &str, f: impl FnOnce(&mut JobRecord)) {
        if let Some(j) = self.table.lock().expect("job table poisoned").jobs.get_mut(job_id) {
            f(j);
        }
    }

    async fn execute(self: Arc<Self>, job_id: String, params: JobParams) {
        let _permit = match Arc::clone(&self.permits).acquire_owned().await {
            Ok(p) => p,
            Err(_) => return,
        };
        let _train_guard = match &params {
            JobParams::Train(p) => match p.kind() {
                Ok(kind) => Some(Arc::clone(&self.train_locks[&kind]).lock_owned().await),
                Err(_) => None,
            },
            _ => None,
        };
        let started = (self.ctx.clock)();
        self.update(&job_id, |j| {
            j.state = JobState::Running;
            j.started_at = Some(started);
        });
        tracing::info!(job = %job_id, "job started");
        let ctx = self.ctx.clone();
        let id = job_id.clone();
        let outcome = tokio::task::spawn_blocking(move || run_job(&ctx, &id, params))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        let finished = (self.ctx.clock)();
        self.update(&job_id, |j| {
            j.finished_at = Some(finished);
            match outcome {
                Ok((path, summary)) => {
                    j.state = JobState::Done;
                    j.result_path = Some(path);
                    j.summary = Some(summary);
                }
                Err(e) => {
                    tracing::warn!(job = %j.job_id, error = %e, "job failed");
                    j.state = JobState::Failed;
                    j.error = Some(e);
                }
            }
        });
    }
}

/// Path of the most recent evaluation report.
pub fn latest_report_path(artifact_dir: &Path) -> PathBuf {
    artifact_dir.join("reports").join("latest.json")
}

fn run_job(ctx: &JobContext, job_id: &str, params: JobParams) -> Result<(PathBuf, Value), String> {
    let dir = ctx.artifact_dir.join("jobs").join(job_id);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    run_job_in(ctx, &dir, params).map_err(|e| e.to_string())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn run_job_in(ctx: &JobContext, dir: &Path, params: JobParams) -> Result<(PathBuf, Value), TaskError> {
    match params {
        JobParams::Ingest(p) => {
            let (records, summary) = tasks::run_ingest(&p)?;
            let path = dir.join("corpus.jsonl");
            tasks::write_records(&path, &records)?;
            let added = ctx.store.add_records(records)?;
            let mut value = to_value(&summary);
            value["added_to_store"] = added.into();
            Ok((path, value))
        }
        JobParams::Suggest(p) => {
            let client = tasks::completion_client(&ctx.llm)?;
            let prompt = tasks::prompt_template(&ctx.llm)?;
            let records = ctx.store.read(|s| {
                s.records()
                    .iter()
                    .filter(|r| p.record_ids.as_ref().is_none_or(|ids| ids.contains(&r.id)))
                    .filter(|r| p.overwrite || s.suggestion(&r.id).is_none())
                    .cloned()
                    .collect::<Vec<_>>()
            });
            let outcome = tasks::suggest_all(&records, client.as_ref(), &prompt, (ctx.clock)());
            for s in &outcome.suggestions {
                ctx.store.record_suggestion(s.clone())?;
            }
            let path = dir.join("suggestions.jsonl");
            newsbench_core::jsonl::write(&path, &outcome.suggestions)?;
            Ok((path, serde_json::json!({"suggested": outcome.suggestions.len(), "failures": outcome.failures})))
        }
        JobParams::Train(p) => {
            let model = tasks::run_train(&p, Some((ctx.clock)()))?;
            let path = dir.join(format!("{}.model.json", model.kind.as_str()));
            model.save(&path).map_err(TaskError::Model)?;
            Ok((path, to_value(&model.metadata)))
        }
        JobParams::Evaluate(p) => {
            let lb = tasks::run_evaluate(&p)?;
            let path = tasks::write_reports(&lb, dir, "report", p.include_tn)?;
            let latest = latest_report_path(&ctx.artifact_dir);
            std::fs::create_dir_all(latest.parent().expect("has parent"))?;
            std::fs::copy(&path, &latest)?;
            let best = lb.rows.first().map(|r| r.report.model_name.clone());
            Ok((path, serde_json::json!({"models": lb.rows.len(), "top": best})))
        }
    }
}
