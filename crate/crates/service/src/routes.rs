use std::sync::Arc;

use axum::body::Body;
use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use foamforge_api::{
    slice_svg_bytes, CreateSessionRequest, GenerateSummary, Health, ModelInfo, OptimizeRequest, ParamsPatch, Region, SessionDto,
};
use foamforge_core::{optimize_rotation, rotate_mesh, write_mesh, MeshFormat, OutputFormat, ScoreReport};

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, Artifact, Generated};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    // multipart framing on top of the file itself
    let upload_limit = state.config.max_upload_bytes.saturating_add(64 << 10);
    Router::new()
        .route("/healthz", get(health))
        .route("/api/models", post(upload_model).layer(DefaultBodyLimit::max(upload_limit)))
        .route("/api/models/{id}", get(get_model))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/params", patch(patch_params))
        .route("/api/sessions/{id}/generate", post(generate))
        .route("/api/sessions/{id}/optimize-angle", post(optimize_angle))
        .route("/api/sessions/{id}/model.stl", get(posed_model))
        .route("/api/sessions/{id}/slices", get(slices))
        .route("/api/sessions/{id}/slices/{file}", get(slice_svg))
        .route("/api/sessions/{id}/foam/{file}", get(foam))
        .route("/api/sessions/{id}/block-map.json", get(block_map_json))
        .route("/api/sessions/{id}/block-map.bin", get(block_map_bin))
        .with_state(state)
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn upload_model(State(state): State<Shared>, multipart: Result<Multipart, MultipartRejection>) -> ApiResult<(StatusCode, Json<ModelInfo>)> {
    let mut multipart = multipart.map_err(|e| ApiError::bad_request("bad_multipart", e.body_text()))?;
    let too_large = |limit: usize| ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "too_large", format!("uploads are limited to {limit} bytes"));
    let limit = state.config.max_upload_bytes;
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => return Err(ApiError::bad_request("missing_file", "expected a multipart field carrying a file name")),
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => return Err(too_large(limit)),
            Err(e) => return Err(ApiError::bad_request("bad_multipart", e.body_text())),
        };
        let Some(name) = field.file_name().map(str::to_owned) else {
            continue;
        };
        let format = MeshFormat::from_path(std::path::Path::new(&name))
            .ok_or_else(|| ApiError::bad_request("unsupported_format", format!("cannot infer a mesh format from {name:?}")))?;
        let bytes = match field.bytes().await {
            Ok(b) => b,
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => return Err(too_large(limit)),
            Err(e) => return Err(ApiError::bad_request("bad_multipart", e.body_text())),
        };
        if bytes.len() > limit {
            return Err(too_large(limit));
        }
        let st = state.clone();
        let model = tokio::task::spawn_blocking(move || st.insert_model(&bytes, format))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        tracing::info!(model = %model.info.model_id, vertices = model.info.vertex_count, "model stored");
        return Ok((StatusCode::CREATED, Json(model.info.clone())));
    }
}

async fn get_model(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ModelInfo>> {
    let model = tokio::task::spawn_blocking(move || state.model(&id))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(model.info.clone()))
}

async fn create_session(State(state): State<Shared>, Json(req): Json<CreateSessionRequest>) -> ApiResult<(StatusCode, Json<SessionDto>)> {
    let slot = tokio::task::spawn_blocking(move || state.create_session(&req.model_id))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let dto = slot.lock().dto();
    Ok((StatusCode::CREATED, Json(dto)))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionDto>> {
    Ok(Json(state.session(&id)?.lock().dto()))
}

async fn patch_params(State(state): State<Shared>, Path(id): Path<String>, body: axum::body::Bytes) -> ApiResult<Json<SessionDto>> {
    let slot = state.session(&id)?;
    let patch: ParamsPatch = serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?;
    let mut s = slot.lock();
    let next = patch
        .apply(&s.params)
        .map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?;
    s.set_params(next);
    Ok(Json(s.dto()))
}

async fn generate(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<GenerateSummary>> {
    let slot = state.session(&id)?;
    let guard = slot.try_begin()?;
    let generated = tokio::task::spawn_blocking(move || {
        let _guard = guard;
        state.generate_blocking(&slot)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    tracing::info!(session = %id, timing_ms = generated.summary.timing_ms, "generated");
    Ok(Json(generated.summary.clone()))
}

async fn optimize_angle(State(state): State<Shared>, Path(id): Path<String>, body: axum::body::Bytes) -> ApiResult<Json<ScoreReport>> {
    let req: OptimizeRequest = if body.is_empty() {
        OptimizeRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?
    };
    let cfg = req.config();
    cfg.candidates().map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?;
    let slot = state.session(&id)?;
    let guard = slot.try_begin()?;
    let (model_id, params) = {
        let s = slot.lock();
        (s.model_id.clone(), s.params)
    };
    let model = state.model(&model_id)?;
    let space = params.space().map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?;
    let report = tokio::task::spawn_blocking(move || {
        let _guard = guard;
        optimize_rotation(&model.mesh, &space, &cfg, params.angles_deg, params.supersample, foamforge_core::Parallelism::Parallel)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::unprocessable("optimize", e.to_string()))?;
    let mut s = slot.lock();
    if s.params == params {
        let mut next = params;
        next.angles_deg = report.angles;
        s.set_params(next);
    }
    Ok(Json(report))
}

/// The centered model in the session's current pose.
async fn posed_model(State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let slot = state.session(&id)?;
    let (model_id, angles) = {
        let s = slot.lock();
        (s.model_id.clone(), s.params.angles_deg)
    };
    let model = state.model(&model_id)?;
    let bytes = tokio::task::spawn_blocking(move || write_mesh(&rotate_mesh(&model.mesh, angles), OutputFormat::StlBinary))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(serve_bytes(&headers, &Artifact::from_vec(bytes), OutputFormat::StlBinary.content_type()))
}

fn current(state: &AppState, id: &str) -> ApiResult<Arc<Generated>> {
    state.session(id)?.lock().current().ok_or_else(ApiError::not_generated)
}

async fn slices(State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let g = current(&state, &id)?;
    Ok(serve_bytes(&headers, &g.slices_json, "application/json"))
}

async fn slice_svg(State(state): State<Shared>, Path((id, file)): Path<(String, String)>, headers: HeaderMap) -> ApiResult<Response> {
    let g = current(&state, &id)?;
    let i: usize = file
        .strip_suffix(".svg")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ApiError::not_found("unknown_artifact", format!("no slice {file}")))?;
    let bytes = slice_svg_bytes(&g.result.slices, i)
        .ok_or_else(|| ApiError::not_found("layer_out_of_range", format!("layer {i} is outside 0..{}", g.result.slices.len())))?;
    Ok(serve_bytes(&headers, &Artifact::from_vec(bytes), "image/svg+xml"))
}

async fn foam(State(state): State<Shared>, Path((id, file)): Path<(String, String)>, headers: HeaderMap) -> ApiResult<Response> {
    let unknown = || ApiError::not_found("unknown_artifact", format!("no foam file {file}"));
    let (region, ext) = file.split_once('.').ok_or_else(unknown)?;
    let region = Region::parse(region).ok_or_else(unknown)?;
    let format = OutputFormat::from_extension(ext).ok_or_else(unknown)?;
    let g = current(&state, &id)?;
    Ok(serve_bytes(&headers, &g.foams[&(region, format)], format.content_type()))
}

async fn block_map_json(State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let g = current(&state, &id)?;
    Ok(serve_bytes(&headers, &g.block_map_json, "application/json"))
}

async fn block_map_bin(State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let g = current(&state, &id)?;
    Ok(serve_bytes(&headers, &g.block_map_bin, "application/octet-stream"))
}

fn serve_bytes(headers: &HeaderMap, artifact: &Artifact, content_type: &'static str) -> Response {
    let etag = HeaderValue::from_str(&artifact.etag).expect("etags are ascii");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == artifact.etag || t.trim() == "*"));
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static(content_type)),
            (header::ETAG, etag),
            (header::CACHE_CONTROL, HeaderValue::from_static("no-cache")),
        ],
        Body::from(artifact.bytes.clone()),
    )
        .into_response()
}
