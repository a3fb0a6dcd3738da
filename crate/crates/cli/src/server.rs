//! HTTP API over the pipeline, the log store, the review store and the library.
//!
//! Errors are JSON `{"error": .., "field": ..}`; `field` names the offending
//! request field when there is one.

use std::collections::HashMap;
use std::sync::Arc;

use aetheria_core::library::CaseLibrary;
use aetheria_core::log_store::{LogStore, RunFilter};
use aetheria_core::model::{
    AuditReport, CaseRecord, ContentItem, GroundTruthLabel, Modality, Outcome, RunRecord, RunStatus, Verdict,
};
use aetheria_core::pipeline::{Pipeline, RunContext};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use crate::review::{consensus, queue_reasons, QueueReason, ReviewError, ReviewStore, Vote};

#[derive(Clone)]
pub struct AppState {
    pipeline: Pipeline,
    store: Arc<LogStore>,
    review: Arc<ReviewStore>,
    library: Arc<CaseLibrary>,
    permits: Arc<Semaphore>,
}

impl AppState {
    /// Moderation requests share `parallelism` slots, one under replay.
    pub fn new(pipeline: Pipeline, store: Arc<LogStore>, review: Arc<ReviewStore>, library: Arc<CaseLibrary>) -> Self {
        let slots = if pipeline.gateway().is_positional() { 1 } else { pipeline.config().parallelism.max(1) };
        AppState { pipeline, store, review, library, permits: Arc::new(Semaphore::new(slots)) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/moderate", post(moderate))
        .route("/api/runs", get(list_runs))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/review/queue", get(review_queue))
        .route("/api/review/iaa", get(review_iaa))
        .route("/api/review/labels", get(review_labels))
        .route("/api/review/flags", post(review_flags))
        .route("/api/review/{id}", get(review_item))
        .route("/api/review/{id}/vote", post(review_vote))
        .route("/api/library/cases", get(library_cases))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError { status, error: error.into(), field: None }
    }

    fn bad_field(field: impl Into<String>, error: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, error: error.into(), field: Some(field.into()) }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("{what} {id} not found"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.error, "field": self.field}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body, naming the offending field on failure.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let message = err.inner().to_string();
        let field = if path != "." {
            Some(path)
        } else {
            ["missing field `", "unknown field `"]
                .iter()
                .find_map(|p| message.split_once(p).and_then(|(_, rest)| rest.split_once('`')).map(|(f, _)| f.to_string()))
        };
        ApiError { status: StatusCode::BAD_REQUEST, error: message, field }
    })
}

/// A content item whose id and modality may be omitted.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModerateRequest {
    pub id: Option<String>,
    pub text: Option<String>,
    pub image_ref: Option<String>,
    pub image_description: Option<String>,
    pub modality: Option<Modality>,
    pub label: Option<GroundTruthLabel>,
    pub category: Option<String>,
}

fn present(s: &Option<String>) -> bool {
    s.as_deref().is_some_and(|v| !v.trim().is_empty())
}

/// text plus image is `text_image`, image alone `image_only`, otherwise `text_only`.
pub fn infer_modality(text: &Option<String>, image_ref: &Option<String>, image_description: &Option<String>) -> Modality {
    match (present(text), present(image_ref) || present(image_description)) {
        (true, true) => Modality::TextImage,
        (false, true) => Modality::ImageOnly,
        _ => Modality::TextOnly,
    }
}

impl ModerateRequest {
    pub fn into_item(self) -> ContentItem {
        let modality = self.modality.unwrap_or_else(|| infer_modality(&self.text, &self.image_ref, &self.image_description));
        ContentItem {
            id: self.id.unwrap_or_else(|| format!("item-{}", uuid::Uuid::new_v4().simple())),
            text: self.text,
            image_ref: self.image_ref,
            image_description: self.image_description,
            modality,
            label: self.label,
            category: self.category,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModerateResponse {
    pub run_id: String,
    pub status: RunStatus,
    pub report: Option<AuditReport>,
    pub error: Option<String>,
}

pub fn new_run_id() -> String {
    format!("run-{}", uuid::Uuid::new_v4().simple())
}

async fn moderate(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<ModerateResponse>> {
    let item = parse_body::<ModerateRequest>(&body)?.into_item();
    item.validate().map_err(|v| ApiError::bad_field(v.field(), v.to_string()))?;
    let run = {
        let _permit = s.permits.acquire().await.map_err(ApiError::internal)?;
        s.pipeline
            .run_item(&item, RunContext { run_id: new_run_id(), batch_id: None })
            .await
            .map_err(|v| ApiError::bad_field(v.field(), v.to_string()))?
    };
    s.store.append(&run).map_err(ApiError::internal)?;
    Ok(Json(ModerateResponse { run_id: run.run_id, status: run.status, report: run.report, error: run.error }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub item_id: String,
    pub batch_id: Option<String>,
    pub modality: Modality,
    pub status: RunStatus,
    pub verdict: Option<Verdict>,
    pub final_score: Option<f64>,
    pub outcome: Option<Outcome>,
    pub finished_at: DateTime<Utc>,
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        RunSummary {
            run_id: r.run_id.clone(),
            item_id: r.item_id.clone(),
            batch_id: r.batch_id.clone(),
            modality: r.modality(),
            status: r.status,
            verdict: r.verdict(),
            final_score: r.report.as_ref().map(|rep| rep.final_score.value()),
            outcome: r.outcome(),
            finished_at: r.finished_at,
        }
    }
}

fn parse_param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    q.get(key).map(|v| v.parse::<T>().map_err(|e| ApiError::bad_field(key, format!("{key}: {e}")))).transpose()
}

async fn list_runs(State(s): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Json<Vec<RunSummary>>> {
    let filter = RunFilter {
        batch_id: q.get("batch_id").cloned(),
        status: parse_param(&q, "status")?,
        outcome: parse_param(&q, "outcome")?,
    };
    let limit: Option<usize> = parse_param(&q, "limit")?;
    let runs = s.store.query(&filter).map_err(ApiError::internal)?;
    Ok(Json(runs.iter().take(limit.unwrap_or(usize::MAX)).map(RunSummary::from).collect()))
}

async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RunRecord>> {
    s.store.get(&id).map_err(ApiError::internal)?.map(Json).ok_or_else(|| ApiError::not_found("run", &id))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueueEntry {
    pub run_id: String,
    pub item_id: String,
    pub modality: Modality,
    pub status: RunStatus,
    pub verdict: Option<Verdict>,
    pub reasons: Vec<QueueReason>,
    pub votes: usize,
    /// Majority of votes; absent while pending.
    pub consensus: Option<Verdict>,
    pub pending: bool,
}

async fn review_queue(State(s): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Json<Vec<QueueEntry>>> {
    let pending_only: Option<bool> = parse_param(&q, "pending")?;
    let flagged = s.review.flagged();
    let votes = s.review.votes();
    let runs = s.store.all().map_err(ApiError::internal)?;
    let mut queue = Vec::new();
    for run in &runs {
        let reasons = queue_reasons(run, flagged.contains(&run.run_id));
        if reasons.is_empty() {
            continue;
        }
        let own: Vec<&Vote> = votes.iter().filter(|v| v.review_id == run.run_id).collect();
        let agreed = consensus(own.iter().copied());
        if pending_only == Some(true) && agreed.is_some() {
            continue;
        }
        queue.push(QueueEntry {
            run_id: run.run_id.clone(),
            item_id: run.item_id.clone(),
            modality: run.modality(),
            status: run.status,
            verdict: run.verdict(),
            reasons,
            votes: own.len(),
            consensus: agreed,
            pending: agreed.is_none(),
        });
    }
    Ok(Json(queue))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReviewItem {
    pub run: RunRecord,
    pub reasons: Vec<QueueReason>,
    pub votes: Vec<Vote>,
    pub consensus: Option<Verdict>,
}

async fn review_item(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ReviewItem>> {
    let run = s.store.get(&id).map_err(ApiError::internal)?.ok_or_else(|| ApiError::not_found("run", &id))?;
    let votes = s.review.votes_for(&id);
    Ok(Json(ReviewItem {
        reasons: queue_reasons(&run, s.review.flagged().contains(&id)),
        consensus: consensus(&votes),
        votes,
        run,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VoteRequest {
    reviewer: String,
    verdict: Verdict,
    #[serde(default)]
    rationale: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteResponse {
    pub vote: Vote,
    pub consensus: Option<Verdict>,
}

async fn review_vote(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: VoteRequest = parse_body(&body)?;
    if !s.store.contains(&id) {
        return Err(ApiError::not_found("run", &id));
    }
    let vote = s.review.cast(&id, &req.reviewer, req.verdict, &req.rationale).map_err(|e| match e {
        ReviewError::DuplicateVote { .. } => ApiError { status: StatusCode::CONFLICT, error: e.to_string(), field: Some("reviewer".into()) },
        ReviewError::Invalid { field, message } => ApiError::bad_field(field, message),
        ReviewError::Storage(e) => ApiError::internal(e),
    })?;
    let consensus = consensus(&s.review.votes_for(&id));
    Ok((StatusCode::CREATED, Json(VoteResponse { vote, consensus })))
}

async fn review_iaa(State(s): State<AppState>) -> Json<crate::review::IaaReport> {
    Json(s.review.iaa())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagEntry {
    run_id: String,
    #[serde(default)]
    reason: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagsRequest {
    flags: Vec<FlagEntry>,
}

async fn review_flags(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: FlagsRequest = parse_body(&body)?;
    for (i, f) in req.flags.iter().enumerate() {
        if !s.store.contains(&f.run_id) {
            return Err(ApiError::bad_field(format!("flags[{i}].run_id"), format!("unknown run {}", f.run_id)));
        }
    }
    let entries: Vec<(String, String)> = req.flags.into_iter().map(|f| (f.run_id, f.reason)).collect();
    let added = s.review.flag(&entries).map_err(|e| match e {
        ReviewError::Invalid { field, message } => ApiError::bad_field(field, message),
        other => ApiError::internal(other),
    })?;
    Ok(Json(json!({"added": added})))
}

/// Consensus labels as a labeled dataset in JSON Lines, one item per
/// reviewed run; pending runs are left out.
async fn review_labels(State(s): State<AppState>) -> ApiResult<Response> {
    let votes = s.review.votes();
    let mut out = String::new();
    for run in s.store.all().map_err(ApiError::internal)? {
        let Some(verdict) = consensus(votes.iter().filter(|v| v.review_id == run.run_id)) else { continue };
        let item = ContentItem { label: Some(verdict.as_label()), ..run.item };
        out += &serde_json::to_string(&item).map_err(ApiError::internal)?;
        out.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredCase {
    pub case: CaseRecord,
    pub similarity: f64,
}

/// Every case, or with `q` the top `k` (default 5) by similarity.
async fn library_cases(State(s): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    match q.get("q") {
        None => Ok(Json(s.library.records()).into_response()),
        Some(text) => {
            let k: usize = parse_param(&q, "k")?.unwrap_or(5);
            let hits: Vec<ScoredCase> =
                s.library.retrieve_top_k(text, k).into_iter().map(|(case, similarity)| ScoredCase { case, similarity }).collect();
            Ok(Json(hits).into_response())
        }
    }
}
