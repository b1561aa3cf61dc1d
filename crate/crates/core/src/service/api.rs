use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{valid_index_name, AppState, SharedIndex};
use crate::pdq::{hash_bytes, Hash256, PdqError, HASH_BITS};
use crate::tmk::{format as sigfmt, two_phase_match, Thresholds, TmkError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub request_id: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            request_id: uuid::Uuid::new_v4().to_string(),
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn from_rejection(status: StatusCode, text: String) -> Self {
        let code = match status {
            StatusCode::PAYLOAD_TOO_LARGE => "PAYLOAD_TOO_LARGE",
            StatusCode::UNSUPPORTED_MEDIA_TYPE => "UNSUPPORTED_MEDIA_TYPE",
            _ => "BAD_REQUEST",
        };
        Self::new(status, code, text)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<BytesRejection> for ApiError {
    fn from(r: BytesRejection) -> Self {
        Self::from_rejection(r.status(), r.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::from_rejection(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::from_rejection(r.status(), r.body_text())
    }
}

impl From<axum::extract::multipart::MultipartRejection> for ApiError {
    fn from(r: axum::extract::multipart::MultipartRejection) -> Self {
        Self::from_rejection(r.status(), r.body_text())
    }
}

impl From<axum::extract::multipart::MultipartError> for ApiError {
    fn from(e: axum::extract::multipart::MultipartError) -> Self {
        Self::from_rejection(e.status(), e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashResponse {
    pub hash: String,
    pub quality: u8,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexInfo {
    pub name: String,
    pub entries: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InsertRequest {
    pub hash: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: u32,
    pub label: String,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub level1: f64,
    pub level2: Option<f64>,
    pub matched: bool,
    pub degenerate: bool,
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/healthz", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/v1/hash/image", post(hash_image))
        .route("/v1/index/{name}", put(create_index).get(index_info))
        .route("/v1/index/{name}/entries", post(insert_entry))
        .route("/v1/index/{name}/search", get(search))
        .route("/v1/index/{name}/snapshot", post(snapshot))
        .route("/v1/compare/videos", post(compare_videos))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "METHOD_NOT_ALLOWED", "method not allowed on this endpoint")
        })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn hash_image(State(st): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<HashResponse> {
    let body = body?;
    if body.is_empty() {
        return Err(ApiError::bad_request("EMPTY_BODY", "request body is empty"));
    }
    let (res, ms) = st
        .compute(move || {
            let t = Instant::now();
            let r = hash_bytes(&body);
            (r, t.elapsed().as_secs_f64() * 1e3)
        })
        .await;
    match res {
        Ok(h) => Ok(Json(HashResponse { hash: h.bits.to_hex(), quality: h.quality, ms })),
        Err(PdqError::Decode(m)) => Err(ApiError::bad_request("UNDECODABLE", m)),
        Err(e) => Err(ApiError::bad_request("UNDECODABLE", e.to_string())),
    }
}

fn check_name(name: &str) -> Result<(), ApiError> {
    if valid_index_name(name) {
        Ok(())
    } else {
        Err(ApiError::bad_request("BAD_INDEX_NAME", "index names are 1-64 characters of [A-Za-z0-9_-]"))
    }
}

async fn existing(st: &AppState, name: &str) -> Result<SharedIndex, ApiError> {
    check_name(name)?;
    st.index(name)
        .await
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "INDEX_NOT_FOUND", format!("no index named {name}")))
}

async fn create_index(State(st): State<Arc<AppState>>, Path(name): Path<String>) -> Result<Response, ApiError> {
    check_name(&name)?;
    let (idx, created) = st.create_index(&name).await;
    let entries = idx.read().await.len();
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(IndexInfo { name, entries })).into_response())
}

async fn index_info(State(st): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult<IndexInfo> {
    let idx = existing(&st, &name).await?;
    let entries = idx.read().await.len();
    Ok(Json(IndexInfo { name, entries }))
}

fn parse_hash(s: &str) -> Result<Hash256, ApiError> {
    Hash256::from_hex(s).map_err(|e| ApiError::bad_request("BAD_HASH", e.to_string()))
}

async fn insert_entry(
    State(st): State<Arc<AppState>>,
    Path(name): Path<String>,
    body: Result<Json<InsertRequest>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let idx = existing(&st, &name).await?;
    let Json(req) = body?;
    let hash = parse_hash(&req.hash)?;
    let id = idx.write().await.insert(hash, req.label.into_bytes());
    Ok(Json(json!({ "id": id })))
}

async fn search(
    State(st): State<Arc<AppState>>,
    Path(name): Path<String>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<SearchResponse> {
    let idx = existing(&st, &name).await?;
    let Query(q) = query?;
    let hash = parse_hash(q.get("hash").ok_or_else(|| ApiError::bad_request("BAD_HASH", "missing hash"))?)?;
    let radius = match q.get("radius") {
        None => st.config.image_threshold,
        Some(r) => r
            .parse::<u32>()
            .ok()
            .filter(|&r| r as usize <= HASH_BITS)
            .ok_or_else(|| ApiError::bad_request("BAD_RADIUS", format!("radius must be an integer in 0..=256, got {r}")))?,
    };
    // the read guard is held for the whole query, so an answer never mixes
    // states from before and after a concurrent insert
    let guard = idx.clone().read_owned().await;
    let results = st
        .compute(move || guard.query(&hash, radius))
        .await
        .map_err(|e| ApiError::bad_request("BAD_RADIUS", e.to_string()))?;
    Ok(Json(SearchResponse {
        results: results
            .into_iter()
            .map(|r| SearchHit { id: r.id, label: String::from_utf8_lossy(&r.label).into_owned(), distance: r.distance })
            .collect(),
    }))
}

async fn snapshot(State(st): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult<serde_json::Value> {
    existing(&st, &name).await?;
    match st.save_index(&name).await {
        Ok(Some((path, entries))) => Ok(Json(json!({ "name": name, "entries": entries, "path": path }))),
        Ok(None) => Err(ApiError::new(StatusCode::CONFLICT, "NO_SNAPSHOT_DIR", "service has no snapshot_dir configured")),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "SNAPSHOT_FAILED", e.to_string())),
    }
}

fn signature_error(field: &str, e: TmkError) -> ApiError {
    match e {
        TmkError::UnsupportedVersion(v) => {
            ApiError::bad_request("SIG_VERSION", format!("{field}: unsupported signature version {v}"))
        }
        other => ApiError::bad_request("SIG_MALFORMED", format!("{field}: {other}")),
    }
}

async fn compare_videos(
    State(st): State<Arc<AppState>>,
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
) -> ApiResult<CompareResponse> {
    let mut multipart = multipart?;
    let (mut a, mut b, mut force) = (None, None, false);
    while let Some(field) = multipart.next_field().await? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "a" => a = Some(field.bytes().await?),
            "b" => b = Some(field.bytes().await?),
            "force" => {
                force = match field.text().await?.trim() {
                    "true" | "1" => true,
                    "false" | "0" | "" => false,
                    other => return Err(ApiError::bad_request("BAD_FORCE", format!("force must be true or false, got {other}"))),
                }
            }
            _ => {}
        }
    }
    let (Some(a), Some(b)) = (a, b) else {
        return Err(ApiError::bad_request("MISSING_FIELD", "multipart fields a and b are required"));
    };
    let cfg = st.config.thresholds().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "CONFIG", e.to_string()))?;
    let t = if force { Thresholds { level1: -1.0, level2: cfg.level2 } } else { cfg };
    let d = st
        .compute(move || {
            let sa = sigfmt::from_bytes(&a).map_err(|e| signature_error("a", e))?;
            let sb = sigfmt::from_bytes(&b).map_err(|e| signature_error("b", e))?;
            Ok::<_, ApiError>(two_phase_match(&sa, &sb, t))
        })
        .await?;
    Ok(Json(CompareResponse {
        level1: d.level1_score,
        level2: d.level2_score,
        matched: d.matched,
        degenerate: d.degenerate,
    }))
}
