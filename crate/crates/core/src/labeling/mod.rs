//! Hybrid labeling workflow: LLM suggestions, double human review,
//! adjudication, inter-annotator agreement and gated export.

mod adjudicate;
mod assign;
mod export;
mod kappa;
mod qc;
mod scripted;
mod store;
mod suggest;

pub use adjudicate::{adjudicate, AdjudicatedLabel, AdjudicationStatus, ReviewVote};
pub use assign::{assign_reviews, assignment_id};
pub use export::{export_labeled_corpus, ExportOptions, ExportOutcome, GateReport};
pub use kappa::{cohen_kappa, AgreementReport, AgreementSummary, PairAgreement, KAPPA_GATE};
pub use qc::qc_sample;
pub use scripted::{apply_scripted_reviews, ScriptOutcome, ScriptedDecision};
pub use store::{
    Annotator, AnnotatorRole, Assignment, AssignmentState, DisagreementCase, QueueEntry, Review, ReviewOutcome, ReviewRound,
    Supersession, WorkflowEvent, WorkflowState, WorkflowStore, JOURNAL_FILE,
};
pub use suggest::{
    parse_verdict, suggest_label, ChatCompletionClient, CompletionClient, LabelSuggestion, PromptTemplate, StubClient,
    DEFAULT_PROMPT,
};

use crate::jsonl::JsonlError;
use crate::Label;

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("LLM endpoint returned HTTP {status}: {body}")]
    Upstream { status: u16, body: String },
    #[error("response has no single FAKE/REAL verdict on its first line: {response:?}")]
    UnparseableVerdict { response: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assignment {assignment_id} already has label {stored}; refusing {attempted}")]
    Conflict { assignment_id: String, stored: Label, attempted: Label },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("kappa is undefined: chance agreement is 1 (both raters constant and identical)")]
    UndefinedKappa,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("export blocked: {} unresolved record(s): {}", .0.len(), .0.join(", "))]
    ExportBlocked(Vec<String>),
    #[error("export refused: agreement gate failed for {} reviewer pair(s)", .0.failing_pairs.len())]
    GateRefused(Box<GateReport>),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabelError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, LabelError::Transport(_))
    }
}
