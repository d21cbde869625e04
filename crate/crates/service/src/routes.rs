use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use adwatch::audit::{normalize_text, score_corpus, AuditError, Flag, Verdict};
use adwatch::eval::cohen_kappa;
use adwatch::{AdRecord, AdSource};

use crate::{AnnotatorLabel, AppState, LabelEvent};

const DEFAULT_LIMIT: usize = 50;
const MAX_LIMIT: usize = 1000;

/// Error body: `{"error": "..."}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<AuditError> for ApiError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::UnknownFlag(id) => ApiError::not_found(format!("flag {id}")),
            AuditError::MissingReviewer(_) => ApiError::invalid(e.to_string()),
            other => ApiError::internal(other),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ads", get(list_ads))
        .route("/ads/{id}", get(get_ad))
        .route("/score", post(score))
        .route("/flags", get(list_flags))
        .route("/flags/scan", post(scan_flags))
        .route("/flags/{id}/verdict", post(set_verdict))
        .route("/labels", get(list_labels).post(add_label))
        .route("/agreement", get(agreement))
        .route("/metrics", get(metrics))
        .route("/roc", get(roc))
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let model = state.model();
    Json(json!({
        "status": "ok",
        "version": adwatch::VERSION,
        "collector_ads": state.collector.as_ref().map_or(0, |s| s.store.len()),
        "declared_ads": state.declared.as_ref().map_or(0, |s| s.store.len()),
        "model_id": model.as_ref().map(|m| m.id.clone()),
    }))
}

#[derive(Debug, Deserialize)]
struct AdsQuery {
    q: Option<String>,
    source: Option<AdSource>,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
    limit: Option<usize>,
    offset: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Page<T> {
    total: usize,
    offset: usize,
    limit: usize,
    items: Vec<T>,
}

/// Browses both corpora. `q` matches a substring of the normalized caption;
/// `from`/`to` bound the first-seen date, inclusive.
async fn list_ads(State(state): State<AppState>, Query(q): Query<AdsQuery>) -> ApiResult<Json<Page<AdRecord>>> {
    if !state.has_store() {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no corpus loaded"));
    }
    let limit = q.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT);
    let offset = q.offset.unwrap_or(0);
    let needle = q.q.as_deref().map(normalize_text).filter(|n| !n.is_empty());
    let hits: Vec<&AdRecord> = [&state.collector, &state.declared]
        .into_iter()
        .flatten()
        .flat_map(|s| s.store.iter().zip(&s.search_text))
        .filter(|(ad, text)| {
            q.source.is_none_or(|src| ad.source == src)
                && q.from.is_none_or(|d| ad.first_seen.date_naive() >= d)
                && q.to.is_none_or(|d| ad.first_seen.date_naive() <= d)
                && needle.as_deref().is_none_or(|n| text.contains(n))
        })
        .map(|(ad, _)| ad)
        .collect();
    Ok(Json(Page {
        total: hits.len(),
        offset,
        limit,
        items: hits.into_iter().skip(offset).take(limit).cloned().collect(),
    }))
}

async fn get_ad(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<AdRecord>> {
    state
        .find_ad(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("ad {id}")))
}

#[derive(Debug, Deserialize)]
struct ScoreRequest {
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub probability: f64,
    pub flagged: bool,
    pub threshold: f64,
    pub model_id: String,
}

async fn score(State(state): State<AppState>, Json(req): Json<ScoreRequest>) -> ApiResult<Json<ScoreResponse>> {
    let model = state
        .model()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no model loaded"))?;
    let probability = model
        .classifier
        .score_text(&req.text)
        .map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(Json(ScoreResponse {
        probability,
        flagged: probability >= model.threshold,
        threshold: model.threshold,
        model_id: model.id.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct FlagsQuery {
    verdict: Option<Verdict>,
}

#[derive(Debug, Serialize)]
struct FlagView {
    #[serde(flatten)]
    flag: Flag,
    ad: Option<AdRecord>,
}

async fn list_flags(State(state): State<AppState>, Query(q): Query<FlagsQuery>) -> Json<Value> {
    let flags = state.flags.lock().expect("flag lock poisoned").flags(q.verdict);
    let items: Vec<FlagView> = flags
        .into_iter()
        .map(|flag| {
            let ad = state.find_ad(&flag.ad_id).cloned();
            FlagView { flag, ad }
        })
        .collect();
    Json(json!({ "total": items.len(), "items": items }))
}

/// Scores the collector corpus with the active model and adds any new flags
/// to the journal.
async fn scan_flags(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let model = state
        .model()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no model loaded"))?;
    if state.collector.is_none() {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no collector corpus loaded"));
    }
    tokio::task::spawn_blocking(move || {
        let store = &state.collector.as_ref().expect("checked above").store;
        let flags = score_corpus(&model.classifier, store, model.threshold, &model.id)?;
        let added = state.flags.lock().expect("flag lock poisoned").create_flags(&flags)?;
        Ok(Json(json!({ "flagged": flags.len(), "added": added })))
    })
    .await
    .map_err(ApiError::internal)?
}

#[derive(Debug, Deserialize)]
struct VerdictRequest {
    verdict: Verdict,
    reviewer: Option<String>,
}

async fn set_verdict(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<VerdictRequest>,
) -> ApiResult<Json<Flag>> {
    tokio::task::spawn_blocking(move || {
        let mut journal = state.flags.lock().expect("flag lock poisoned");
        Ok(Json(journal.set_verdict(&id, req.verdict, req.reviewer.as_deref(), Utc::now())?))
    })
    .await
    .map_err(ApiError::internal)?
}

#[derive(Debug, Deserialize)]
struct LabelRequest {
    ad_id: String,
    annotator: String,
    label: AnnotatorLabel,
}

async fn add_label(State(state): State<AppState>, Json(req): Json<LabelRequest>) -> ApiResult<Json<LabelEvent>> {
    let annotator = req.annotator.trim().to_string();
    if annotator.is_empty() {
        return Err(ApiError::invalid("annotator must not be empty"));
    }
    if state.has_store() && state.find_ad(&req.ad_id).is_none() {
        return Err(ApiError::not_found(format!("ad {}", req.ad_id)));
    }
    let event = LabelEvent {
        ad_id: req.ad_id,
        annotator,
        label: req.label,
        at: Utc::now(),
    };
    tokio::task::spawn_blocking(move || {
        let mut journal = state.labels.lock().expect("label lock poisoned");
        journal.record(event.clone()).map_err(ApiError::internal)?;
        Ok(Json(event))
    })
    .await
    .map_err(ApiError::internal)?
}

#[derive(Debug, Deserialize)]
struct LabelsQuery {
    annotator: Option<String>,
}

async fn list_labels(State(state): State<AppState>, Query(q): Query<LabelsQuery>) -> Json<Value> {
    let items = state
        .labels
        .lock()
        .expect("label lock poisoned")
        .latest(q.annotator.as_deref());
    Json(json!({ "total": items.len(), "items": items }))
}

#[derive(Debug, Deserialize)]
struct AgreementQuery {
    annotators: String,
}

/// Cohen's kappa between two annotators over the ads both labeled decisively.
async fn agreement(State(state): State<AppState>, Query(q): Query<AgreementQuery>) -> ApiResult<Json<Value>> {
    let names: Vec<&str> = q.annotators.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let [a, b] = names[..] else {
        return Err(ApiError::invalid("annotators must name exactly two annotators, comma separated"));
    };
    let (ids, la, lb, unsure) = state.labels.lock().expect("label lock poisoned").paired(a, b);
    let report = cohen_kappa(&la, &lb).map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(Json(json!({
        "annotators": [a, b],
        "ad_ids": ids,
        "unsure_skipped": unsure,
        "report": report,
    })))
}

async fn metrics(State(state): State<AppState>) -> ApiResult<Json<adwatch::eval::CvReport>> {
    state
        .metrics
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("metrics"))
}

async fn roc(State(state): State<AppState>) -> ApiResult<Response> {
    let curve = state.roc.as_ref().ok_or_else(|| ApiError::not_found("roc"))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], curve.to_csv()).into_response())
}
