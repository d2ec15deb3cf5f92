//! Service configuration: a TOML file plus environment overrides.
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! store_dir = "store"
//! artifact_dir = "artifacts"
//! ui_dir = "ui/dist"
//! workers = 2
//!
//! [llm]
//! base_url = "https://api.openai.com/v1"
//! model = "gpt-4"
//! # or answer from canned responses instead of calling an endpoint
//! stub_responses = "fixtures/llm_responses.jsonl"
//!
//! [[tokens]]
//! token = "ana-secret"
//! annotator_id = "ana"
//! role = "reviewer"
//!
//! [[tokens]]
//! token = "admin-secret"
//! role = "admin"
//! ```
//!
//! Environment variables override the file: `NEWSBENCH_BIND`,
//! `NEWSBENCH_STORE_DIR`, `NEWSBENCH_ARTIFACT_DIR`, `NEWSBENCH_UI_DIR`,
//! `NEWSBENCH_WORKERS`, `NEWSBENCH_LLM_BASE_URL`, `NEWSBENCH_LLM_MODEL`,
//! `NEWSBENCH_LLM_STUB`. The API key is only read from
//! `NEWSBENCH_LLM_API_KEY`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auth::Role;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub token: String,
    #[serde(default)]
    pub annotator_id: Option<String>,
    pub role: Role,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub prompt_file: Option<PathBuf>,
    pub stub_responses: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub store_dir: PathBuf,
    pub artifact_dir: PathBuf,
    pub ui_dir: Option<PathBuf>,
    /// Concurrent background jobs.
    pub workers: usize,
    pub llm: LlmConfig,
    pub tokens: Vec<TokenEntry>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            store_dir: "store".into(),
            artifact_dir: "artifacts".into(),
            ui_dir: None,
            workers: 2,
            llm: LlmConfig::default(),
            tokens: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ServiceConfig {
    /// Load `path` (defaults when `None`) and apply environment overrides.
    /// Relative paths in the file resolve against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                let mut cfg: ServiceConfig =
                    toml::from_str(&text).map_err(|e| ConfigError::Parse { path: p.into(), message: e.to_string() })?;
                if let Some(base) = p.parent() {
                    cfg.resolve_relative(base);
                }
                cfg
            }
            None => ServiceConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.store_dir);
        fix(&mut self.artifact_dir);
        for p in [&mut self.ui_dir, &mut self.llm.prompt_file, &mut self.llm.stub_responses].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let var = |k: &str| var(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = var("NEWSBENCH_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("NEWSBENCH_STORE_DIR") {
            self.store_dir = v.into();
        }
        if let Some(v) = var("NEWSBENCH_ARTIFACT_DIR") {
            self.artifact_dir = v.into();
        }
        if let Some(v) = var("NEWSBENCH_UI_DIR") {
            self.ui_dir = Some(v.into());
        }
        if let Some(v) = var("NEWSBENCH_WORKERS") {
            self.workers = v.parse().map_err(|_| ConfigError::Invalid(format!("NEWSBENCH_WORKERS={v:?} is not a count")))?;
        }
        if let Some(v) = var("NEWSBENCH_LLM_BASE_URL") {
            self.llm.base_url = Some(v);
        }
        if let Some(v) = var("NEWSBENCH_LLM_MODEL") {
            self.llm.model = Some(v);
        }
        if let Some(v) = var("NEWSBENCH_LLM_STUB") {
            self.llm.stub_responses = Some(v.into());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.tokens {
            if t.token.len() < 8 {
                return Err(ConfigError::Invalid("tokens must be at least 8 characters".into()));
            }
            if !seen.insert(&t.token) {
                return Err(ConfigError::Invalid("duplicate token".into()));
            }
            if t.role == Role::Reviewer && t.annotator_id.is_none() {
                return Err(ConfigError::Invalid("reviewer tokens need an annotator_id".into()));
            }
        }
        Ok(())
    }
}
