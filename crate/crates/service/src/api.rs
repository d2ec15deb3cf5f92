//! JSON HTTP API for the annotation UI and for job control.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use newsbench_core::ingest::ConsolidatedRecord;
use newsbench_core::labeling::{
    Assignment, DisagreementCase, ExportOptions, GateReport, LabelError, LabelSuggestion, ReviewOutcome, WorkflowStore,
};
use newsbench_core::Label;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::auth::{Authenticator, Session};
use crate::config::ServiceConfig;
use crate::jobs::{latest_report_path, Clock, JobError, JobKind, JobManager};
use crate::tasks::TaskError;

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<WorkflowStore>,
    pub auth: Arc<dyn Authenticator>,
    pub jobs: Arc<JobManager>,
    pub config: Arc<ServiceConfig>,
    pub clock: Clock,
}

impl AppState {
    fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": {"code": self.code, "message": self.message}});
        if let Some(d) = self.details {
            body["error"]["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<LabelError> for ApiError {
    fn from(e: LabelError) -> Self {
        let message = e.to_string();
        match e {
            LabelError::Conflict { assignment_id, stored, attempted } => ApiError {
                details: Some(json!({"assignment_id": assignment_id, "stored": stored, "attempted": attempted})),
                ..ApiError::conflict(message)
            },
            LabelError::NotFound(_) => ApiError::not_found(message),
            LabelError::Input(_) | LabelError::Config(_) => ApiError::unprocessable(message),
            LabelError::Integrity(_) => ApiError::conflict(message),
            _ => ApiError::internal(message),
        }
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        match e {
            JobError::Invalid(TaskError::Invalid(m)) => ApiError::unprocessable(m),
            JobError::Invalid(other) => ApiError::unprocessable(other.to_string()),
            JobError::KeyReused(_) => ApiError::conflict(e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn require_admin(session: &Session) -> ApiResult<()> {
    if session.is_admin() {
        Ok(())
    } else {
        Err(ApiError::forbidden("administrator token required"))
    }
}

fn api_routes() -> Router<AppState> {
    Router::new()
        .route("/health", get(health))
        .route("/records", get(list_records))
        .route("/queue/{annotator_id}", get(queue))
        .route("/reviews", post(submit_review))
        .route("/supersessions", post(supersede))
        .route("/disagreements", get(disagreements))
        .route("/tiebreaks", post(tiebreak))
        .route("/agreement", get(agreement))
        .route("/jobs", post(submit_job))
        .route("/jobs/{job_id}", get(job_status))
        .route("/reports/latest", get(latest_report))
        .route("/suggestions/{record_id}", get(suggestion))
        .route("/settings/suggestion-visibility", put(set_visibility))
}

/// `/api/v1` is canonical; `/api` is an alias for the current version.
pub fn router(state: AppState) -> Router {
    let ui_dir = state.config.ui_dir.clone();
    let app = Router::new().nest("/api/v1", api_routes()).nest("/api", api_routes());
    let app = match ui_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    };
    app.with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Debug, Deserialize)]
struct RecordsQuery {
    /// `true`: only records with a resolved final label; `false`: only unresolved.
    labeled: Option<bool>,
    limit: Option<usize>,
    #[serde(default)]
    offset: usize,
}

#[derive(Debug, Serialize)]
struct RecordView {
    #[serde(flatten)]
    record: ConsolidatedRecord,
    final_label: Option<Label>,
}

async fn list_records(State(st): State<AppState>, _s: Session, Query(q): Query<RecordsQuery>) -> ApiResult<Json<Value>> {
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::unprocessable(format!("limit must be between 1 and {MAX_PAGE}")));
    }
    let (total, records) = st.store.read(|s| -> Result<_, LabelError> {
        let mut views = Vec::new();
        for r in s.records() {
            let final_label = s.adjudication(&r.id)?.filter(|a| a.status.is_resolved()).and_then(|a| a.final_label);
            if q.labeled.is_none_or(|want| want == final_label.is_some()) {
                views.push(RecordView { record: r.clone(), final_label });
            }
        }
        let total = views.len();
        Ok((total, views.into_iter().skip(q.offset).take(limit).collect::<Vec<_>>()))
    })?;
    Ok(Json(json!({"total": total, "offset": q.offset, "limit": limit, "records": records})))
}

/// A suggestion as shown to reviewers: the raw model output stays internal.
#[derive(Debug, Serialize)]
struct SuggestionView {
    record_id: String,
    suggested_label: Label,
    model_name: String,
    created_at: DateTime<Utc>,
}

impl From<&LabelSuggestion> for SuggestionView {
    fn from(s: &LabelSuggestion) -> Self {
        SuggestionView {
            record_id: s.record_id.clone(),
            suggested_label: s.suggested_label,
            model_name: s.model_name.clone(),
            created_at: s.created_at,
        }
    }
}

#[derive(Debug, Serialize)]
struct QueueItem {
    assignment: Assignment,
    record: ConsolidatedRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    suggestion: Option<SuggestionView>,
}

async fn queue(State(st): State<AppState>, session: Session, Path(annotator_id): Path<String>) -> ApiResult<Json<Value>> {
    if !session.may_act_as(&annotator_id) {
        return Err(ApiError::forbidden("cannot read another annotator's queue"));
    }
    let (known, visible, entries) =
        st.store.read(|s| (s.annotator(&annotator_id).is_some(), s.suggestions_visible(), s.queue(&annotator_id)));
    if !known {
        return Err(ApiError::not_found(format!("annotator {annotator_id}")));
    }
    let items: Vec<QueueItem> = entries
        .into_iter()
        .map(|e| QueueItem {
            suggestion: e.suggestion.as_ref().filter(|_| visible).map(SuggestionView::from),
            assignment: e.assignment,
            record: e.record,
        })
        .collect();
    Ok(Json(json!({"annotator_id": annotator_id, "suggestions_visible": visible, "items": items})))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewBody {
    assignment_id: String,
    label: Label,
    #[serde(default)]
    note: Option<String>,
}

fn review_response(outcome: ReviewOutcome) -> Response {
    let status = match outcome {
        ReviewOutcome::Stored { .. } => StatusCode::CREATED,
        ReviewOutcome::Unchanged { .. } => StatusCode::OK,
    };
    (status, Json(outcome)).into_response()
}

fn body<T>(b: Result<Json<T>, axum::extract::rejection::JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(|e| ApiError::unprocessable(e.body_text()))
}

async fn submit_review(
    State(st): State<AppState>,
    session: Session,
    b: Result<Json<ReviewBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let b = body(b)?;
    let owner = st.store.read(|s| s.assignment(&b.assignment_id).map(|a| a.annotator_id.clone()));
    let owner = owner.ok_or_else(|| ApiError::not_found(format!("assignment {}", b.assignment_id)))?;
    if !session.may_act_as(&owner) {
        return Err(ApiError::forbidden("assignment belongs to another annotator"));
    }
    Ok(review_response(st.store.record_review(&b.assignment_id, b.label, b.note, st.now())?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupersedeBody {
    assignment_id: String,
    label: Label,
    reason: String,
}

async fn supersede(
    State(st): State<AppState>,
    session: Session,
    b: Result<Json<SupersedeBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let b = body(b)?;
    if b.reason.trim().is_empty() {
        return Err(ApiError::unprocessable("a correction needs a reason"));
    }
    let owner = st.store.read(|s| s.review(&b.assignment_id).map(|r| r.annotator_id.clone()));
    let owner = owner.ok_or_else(|| ApiError::not_found(format!("review for {}", b.assignment_id)))?;
    if !session.may_act_as(&owner) {
        return Err(ApiError::forbidden("review belongs to another annotator"));
    }
    let sup = st.store.supersede(&b.assignment_id, b.label, b.reason, st.now())?;
    Ok((StatusCode::CREATED, Json(sup)).into_response())
}

async fn disagreements(State(st): State<AppState>, session: Session) -> Json<Vec<DisagreementCase>> {
    let eligible_for = if session.is_admin() { None } else { session.annotator_id.clone() };
    Json(st.store.read(|s| s.disagreements(eligible_for.as_deref())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TiebreakBody {
    record_id: String,
    label: Label,
    #[serde(default)]
    note: Option<String>,
    /// Administrators may record a tie-break on behalf of an annotator.
    #[serde(default)]
    annotator_id: Option<String>,
}

async fn tiebreak(
    State(st): State<AppState>,
    session: Session,
    b: Result<Json<TiebreakBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let b = body(b)?;
    let annotator = match (&b.annotator_id, &session.annotator_id) {
        (Some(id), _) if session.may_act_as(id) => id.clone(),
        (Some(_), _) => return Err(ApiError::forbidden("cannot act for another annotator")),
        (None, Some(own)) => own.clone(),
        (None, None) => return Err(ApiError::unprocessable("annotator_id is required for administrator tokens")),
    };
    Ok(review_response(st.store.submit_tiebreak(&b.record_id, &annotator, b.label, b.note, st.now())?))
}

#[derive(Debug, Serialize)]
struct AgreementView {
    #[serde(flatten)]
    gate: GateReport,
}

async fn agreement(State(st): State<AppState>, _s: Session) -> Json<AgreementView> {
    let summary = st.store.read(|s| s.agreement());
    Json(AgreementView { gate: GateReport::evaluate(&summary, &ExportOptions::default()) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobBody {
    kind: JobKind,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    idempotency_key: Option<String>,
}

async fn submit_job(
    State(st): State<AppState>,
    session: Session,
    headers: HeaderMap,
    b: Result<Json<JobBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    require_admin(&session)?;
    let b = body(b)?;
    let header_key = headers.get(IDEMPOTENCY_HEADER).map(|v| v.to_str().map(str::to_string));
    let key = match header_key {
        Some(Ok(k)) => Some(k),
        Some(Err(_)) => return Err(ApiError::unprocessable("idempotency key must be ASCII")),
        None => b.idempotency_key,
    };
    let (record, created) = st.jobs.submit(b.kind, b.params, key)?;
    let status = if created { StatusCode::ACCEPTED } else { StatusCode::OK };
    Ok((status, Json(record)).into_response())
}

async fn job_status(State(st): State<AppState>, _s: Session, Path(job_id): Path<String>) -> ApiResult<Response> {
    let job = st.jobs.get(&job_id).ok_or_else(|| ApiError::not_found(format!("job {job_id}")))?;
    Ok(Json(job).into_response())
}

async fn latest_report(State(st): State<AppState>, _s: Session) -> ApiResult<Json<Value>> {
    let path: PathBuf = latest_report_path(&st.config.artifact_dir);
    let text = match tokio::fs::read_to_string(&path).await {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ApiError::not_found("no evaluation report yet")),
        Err(e) => return Err(ApiError::internal(e.to_string())),
    };
    serde_json::from_str(&text).map(Json).map_err(|e| ApiError::internal(e.to_string()))
}

async fn suggestion(State(st): State<AppState>, session: Session, Path(record_id): Path<String>) -> ApiResult<Response> {
    let (visible, found) = st.store.read(|s| (s.suggestions_visible(), s.suggestion(&record_id).cloned()));
    if !session.is_admin() && !visible {
        return Err(ApiError::forbidden("suggestions are hidden from reviewers"));
    }
    let s = found.ok_or_else(|| ApiError::not_found(format!("no suggestion for {record_id}")))?;
    Ok(if session.is_admin() { Json(s).into_response() } else { Json(SuggestionView::from(&s)).into_response() })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisibilityBody {
    visible: bool,
}

async fn set_visibility(
    State(st): State<AppState>,
    session: Session,
    b: Result<Json<VisibilityBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Json<Value>> {
    require_admin(&session)?;
    let b = body(b)?;
    st.store.set_suggestion_visibility(b.visible)?;
    Ok(Json(json!({"visible": b.visible})))
}

/// Serve until ctrl-c.
pub async fn serve(state: AppState) -> anyhow::Result<()> {
    let bind = state.config.bind.clone();
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
