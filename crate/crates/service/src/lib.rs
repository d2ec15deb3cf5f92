//! HTTP service and command-line front end for the benchmark workflow.

pub mod api;
pub mod auth;
pub mod cli;
pub mod config;
pub mod jobs;
pub mod tasks;

use std::sync::Arc;

use newsbench_core::labeling::WorkflowStore;

use crate::api::AppState;
use crate::auth::TokenAuth;
use crate::config::ServiceConfig;
use crate::jobs::{Clock, JobContext, JobManager};

/// Open the workflow store and wire up authentication and the job runner.
pub fn build_state(config: ServiceConfig, clock: Clock) -> anyhow::Result<AppState> {
    std::fs::create_dir_all(&config.artifact_dir)?;
    let store = Arc::new(WorkflowStore::open(&config.store_dir)?);
    let ctx = JobContext {
        store: Arc::clone(&store),
        artifact_dir: config.artifact_dir.clone(),
        llm: config.llm.clone(),
        clock: Arc::clone(&clock),
    };
    Ok(AppState {
        jobs: Arc::new(JobManager::new(ctx, config.workers)),
        auth: Arc::new(TokenAuth::new(&config.tokens)),
        store,
        config: Arc::new(config),
        clock,
    })
}

pub fn system_clock() -> Clock {
    Arc::new(chrono::Utc::now)
}
