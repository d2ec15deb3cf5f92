use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::ingest::ConsolidatedRecord;
use crate::{jsonl, Label};

pub const DEFAULT_PROMPT: &str = include_str!("../../assets/prompt.txt");

/// Provisional label proposed by a language model for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSuggestion {
    pub record_id: String,
    pub suggested_label: Label,
    /// Verbatim model output, kept for audit.
    pub raw_response: String,
    pub model_name: String,
    pub created_at: DateTime<Utc>,
}

/// A text-completion backend.
pub trait CompletionClient: Send + Sync {
    fn model_name(&self) -> &str;

    /// Complete a single-user-message prompt about `record_id`.
    fn complete(&self, record_id: &str, prompt: &str) -> Result<String, LabelError>;
}

/// Prompt with a `{text}` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate(String);

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, LabelError> {
        let t = template.into();
        if !t.contains("{text}") {
            return Err(LabelError::Config("prompt template lacks a {text} placeholder".into()));
        }
        Ok(PromptTemplate(t))
    }

    pub fn render(&self, text: &str) -> String {
        self.0.replace("{text}", text)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate(DEFAULT_PROMPT.to_string())
    }
}

/// Verdict from the first non-blank response line: the standalone word
/// `FAKE` (1) or `REAL` (0), case-insensitive. Neither or both is an error.
pub fn parse_verdict(response: &str) -> Result<Label, LabelError> {
    let first = response.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut fake = false;
    let mut real = false;
    for w in first.split(|c: char| !c.is_alphanumeric()) {
        fake |= w.eq_ignore_ascii_case("fake");
        real |= w.eq_ignore_ascii_case("real");
    }
    match (fake, real) {
        (true, false) => Ok(Label::Fake),
        (false, true) => Ok(Label::Real),
        _ => Err(LabelError::UnparseableVerdict { response: response.to_string() }),
    }
}

pub fn suggest_label(
    record: &ConsolidatedRecord,
    client: &dyn CompletionClient,
    prompt: &PromptTemplate,
    at: DateTime<Utc>,
) -> Result<LabelSuggestion, LabelError> {
    if record.text.trim().is_empty() {
        return Err(LabelError::Input(format!("record {} has empty text", record.id)));
    }
    let raw = client.complete(&record.id, &prompt.render(&record.text))?;
    let label = parse_verdict(&raw)?;
    Ok(LabelSuggestion {
        record_id: record.id.clone(),
        suggested_label: label,
        raw_response: raw,
        model_name: client.model_name().to_string(),
        created_at: at,
    })
}

/// OpenAI-style `POST {base_url}/chat/completions` client at temperature 0.
#[derive(Debug, Clone)]
pub struct ChatCompletionClient {
    pub base_url: String,
    api_key: String,
    pub model: String,
    pub timeout: Duration,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: String,
}

impl ChatCompletionClient {
    pub const ENV_BASE_URL: &'static str = "NEWSBENCH_LLM_BASE_URL";
    pub const ENV_API_KEY: &'static str = "NEWSBENCH_LLM_API_KEY";
    pub const ENV_MODEL: &'static str = "NEWSBENCH_LLM_MODEL";

    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        ChatCompletionClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            timeout: Duration::from_secs(60),
        }
    }

    /// Configuration from `NEWSBENCH_LLM_BASE_URL`, `NEWSBENCH_LLM_API_KEY`
    /// and `NEWSBENCH_LLM_MODEL`.
    pub fn from_env() -> Result<Self, LabelError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let key = var(Self::ENV_API_KEY).ok_or_else(|| LabelError::Config(format!("{} is not set", Self::ENV_API_KEY)))?;
        let base = var(Self::ENV_BASE_URL).unwrap_or_else(|| "https://api.openai.com/v1".into());
        let model = var(Self::ENV_MODEL).ok_or_else(|| LabelError::Config(format!("{} is not set", Self::ENV_MODEL)))?;
        Ok(Self::new(base, key, model))
    }
}

impl CompletionClient for ChatCompletionClient {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, _record_id: &str, prompt: &str) -> Result<String, LabelError> {
        let body = serde_json::to_string(&ChatRequest {
            model: &self.model,
            temperature: 0.0,
            messages: [ChatMessage { role: "user", content: prompt }],
        })
        .expect("serializable request");
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent
            .post(format!("{}/chat/completions", self.base_url))
            .header("Authorization", format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| LabelError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| LabelError::Transport(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(LabelError::Transport(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(LabelError::Upstream { status, body: text });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| LabelError::Transport(format!("malformed completion body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LabelError::Transport("completion has no choices".into()))
    }
}

/// Offline client answering from canned `{record_id, response}` lines.
#[derive(Debug, Clone, Default)]
pub struct StubClient {
    model: String,
    responses: HashMap<String, String>,
}

#[derive(Deserialize)]
struct CannedResponse {
    record_id: String,
    response: String,
}

impl StubClient {
    pub fn new(model: impl Into<String>, responses: impl IntoIterator<Item = (String, String)>) -> Self {
        StubClient { model: model.into(), responses: responses.into_iter().collect() }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LabelError> {
        let rows: Vec<CannedResponse> = jsonl::read(path)?;
        Ok(Self::new("stub", rows.into_iter().map(|r| (r.record_id, r.response))))
    }
}

impl CompletionClient for StubClient {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, record_id: &str, _prompt: &str) -> Result<String, LabelError> {
        self.responses
            .get(record_id)
            .cloned()
            .ok_or_else(|| LabelError::NotFound(format!("no canned response for record {record_id}")))
    }
}
