//! Typed async client for the foamforge service.
//!
//! ```no_run
//! # async fn run() -> Result<(), foamforge_client::ClientError> {
//! use foamforge_client::FoamClient;
//!
//! let client = FoamClient::new("http://127.0.0.1:8787");
//! let model = client.upload_model("cube.stl", std::fs::read("cube.stl").unwrap()).await?;
//! let session = client.create_session(&model.model_id).await?;
//! let summary = client.generate(&session.id).await?;
//! println!("{} foam blocks", summary.foam_blocks);
//! # Ok(())
//! # }
//! ```

use foamforge_api::{
    CreateSessionRequest, ErrorBody, GenerateSummary, Health, ModelInfo, OptimizeRequest, ParamsPatch, Region, SessionDto, SliceStackJson,
};
use foamforge_core::{OutputFormat, ScoreReport};
use reqwest::multipart::{Form, Part};
use reqwest::{Method, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{status}: {code}: {message}")]
    Api { status: StatusCode, code: String, message: String },
    #[error(transparent)]
    Transport(#[from] reqwest::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }

    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            ClientError::Transport(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct FoamClient {
    base: String,
    http: reqwest::Client,
}

impl FoamClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_http(base_url, reqwest::Client::new())
    }

    pub fn with_http(base_url: impl Into<String>, http: reqwest::Client) -> Self {
        let base = base_url.into().trim_end_matches('/').to_owned();
        Self { base, http }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{}", self.base, path))
    }

    async fn send(req: RequestBuilder) -> Result<Response> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let (code, message) = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => (body.error, body.message),
            Err(_) => (status.canonical_reason().unwrap_or("error").to_owned(), text),
        };
        Err(ClientError::Api { status, code, message })
    }

    async fn json<T: DeserializeOwned>(req: RequestBuilder) -> Result<T> {
        Ok(Self::send(req).await?.json().await?)
    }

    async fn bytes(&self, path: &str) -> Result<Vec<u8>> {
        Ok(Self::send(self.request(Method::GET, path)).await?.bytes().await?.to_vec())
    }

    pub async fn health(&self) -> Result<Health> {
        Self::json(self.request(Method::GET, "/healthz")).await
    }

    /// Uploads mesh bytes; the server infers the format from `file_name`.
    pub async fn upload_model(&self, file_name: &str, bytes: Vec<u8>) -> Result<ModelInfo> {
        let form = Form::new().part("file", Part::bytes(bytes).file_name(file_name.to_owned()));
        Self::json(self.request(Method::POST, "/api/models").multipart(form)).await
    }

    pub async fn model(&self, model_id: &str) -> Result<ModelInfo> {
        Self::json(self.request(Method::GET, &format!("/api/models/{model_id}"))).await
    }

    pub async fn create_session(&self, model_id: &str) -> Result<SessionDto> {
        let body = CreateSessionRequest {
            model_id: model_id.to_owned(),
        };
        Self::json(self.request(Method::POST, "/api/sessions").json(&body)).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionDto> {
        Self::json(self.request(Method::GET, &format!("/api/sessions/{id}"))).await
    }

    pub async fn patch_params(&self, id: &str, patch: &ParamsPatch) -> Result<SessionDto> {
        Self::json(self.request(Method::PATCH, &format!("/api/sessions/{id}/params")).json(patch)).await
    }

    pub async fn generate(&self, id: &str) -> Result<GenerateSummary> {
        Self::json(self.request(Method::POST, &format!("/api/sessions/{id}/generate"))).await
    }

    pub async fn optimize_angle(&self, id: &str, req: &OptimizeRequest) -> Result<ScoreReport> {
        Self::json(self.request(Method::POST, &format!("/api/sessions/{id}/optimize-angle")).json(req)).await
    }

    pub async fn slices(&self, id: &str) -> Result<SliceStackJson> {
        Self::json(self.request(Method::GET, &format!("/api/sessions/{id}/slices"))).await
    }

    /// The slice stack exactly as served.
    pub async fn slices_bytes(&self, id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/slices")).await
    }

    pub async fn slice_svg(&self, id: &str, layer: usize) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/slices/{layer}.svg")).await
    }

    pub async fn foam(&self, id: &str, region: Region, format: OutputFormat) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/foam/{}.{}", region.as_str(), format.extension())).await
    }

    pub async fn block_map_json(&self, id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/block-map.json")).await
    }

    pub async fn block_map_bin(&self, id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/block-map.bin")).await
    }

    /// The centered model in the session's pose, as binary STL.
    pub async fn posed_model(&self, id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/sessions/{id}/model.stl")).await
    }
}
