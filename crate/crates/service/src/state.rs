//! Models, sessions and cached generations.
//!
//! Models are immutable once uploaded and live in the spool directory under
//! a content hash, so they survive restarts. Sessions are in memory and can
//! be snapshotted to JSON on shutdown.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use foamforge_api::{
    foam_bytes, sha256_hex, slices_json_bytes, BoundingBox, GenerateSummary, ModelInfo, Region, SessionDto, SessionParams,
};
use foamforge_core::pipeline::{generate, prepare_mesh, Parallelism};
use foamforge_core::{bounding_box, load_mesh, MeshError, MeshFormat, OutputFormat, TriangleMesh};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone)]
pub struct Config {
    pub spool_dir: PathBuf,
    pub max_upload_bytes: usize,
    pub supersample: u32,
    pub snapshot: Option<PathBuf>,
}

impl Config {
    pub fn new(spool_dir: impl Into<PathBuf>) -> Self {
        Self {
            spool_dir: spool_dir.into(),
            max_upload_bytes: 256 << 20,
            supersample: foamforge_core::pipeline::DEFAULT_SUPERSAMPLE,
            snapshot: None,
        }
    }
}

pub struct Model {
    pub info: ModelInfo,
    /// Centered at load; every session rotates this copy.
    pub mesh: Arc<TriangleMesh>,
}

#[derive(Clone)]
pub struct Artifact {
    pub bytes: axum::body::Bytes,
    pub etag: String,
}

impl Artifact {
    pub fn from_vec(bytes: Vec<u8>) -> Self {
        let etag = foamforge_api::etag(&bytes);
        Self {
            bytes: bytes.into(),
            etag,
        }
    }
}

/// One finished generation with its downloads encoded up front.
pub struct Generated {
    pub params: SessionParams,
    pub result: foamforge_core::FoamResult,
    pub summary: GenerateSummary,
    pub foams: HashMap<(Region, OutputFormat), Artifact>,
    pub slices_json: Artifact,
    pub block_map_json: Artifact,
    pub block_map_bin: Artifact,
}

impl Generated {
    fn build(session_id: &str, params: SessionParams, mesh: &TriangleMesh) -> ApiResult<Self> {
        let gp = params
            .generate_params()
            .map_err(|e| ApiError::unprocessable("invalid_params", e.to_string()))?;
        let result = generate(mesh, &gp, Parallelism::Parallel).map_err(|e| ApiError::unprocessable("pipeline", e.to_string()))?;
        let mut foams = HashMap::new();
        for region in Region::BOTH {
            for format in [OutputFormat::StlBinary, OutputFormat::PlyAscii] {
                foams.insert((region, format), Artifact::from_vec(foam_bytes(&result, region, format)));
            }
        }
        let block_map_json = serde_json::to_vec(&result.block_map.to_json()).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(Self {
            summary: GenerateSummary::new(session_id, params, &result),
            slices_json: Artifact::from_vec(slices_json_bytes(&result.slices)),
            block_map_json: Artifact::from_vec(block_map_json),
            block_map_bin: Artifact::from_vec(result.block_map.to_bytes()),
            foams,
            params,
            result,
        })
    }
}

pub struct Session {
    pub id: String,
    pub model_id: String,
    pub params: SessionParams,
    pub created_at: u64,
    pub updated_at: u64,
    pub generated: Option<Arc<Generated>>,
}

impl Session {
    pub fn dto(&self) -> SessionDto {
        SessionDto {
            id: self.id.clone(),
            model_id: self.model_id.clone(),
            params: self.params,
            generated: self.generated.as_ref().is_some_and(|g| g.params == self.params),
            created_at: self.created_at,
            updated_at: self.updated_at,
        }
    }

    /// The cached generation, if it still matches the current parameters.
    pub fn current(&self) -> Option<Arc<Generated>> {
        self.generated.clone().filter(|g| g.params == self.params)
    }

    pub fn set_params(&mut self, params: SessionParams) {
        if params != self.params {
            self.params = params;
            self.generated = None;
        }
        self.updated_at = now_ms();
    }
}

pub struct SessionSlot {
    busy: AtomicBool,
    pub inner: Mutex<Session>,
}

/// Held while a pipeline run is in flight; clears the flag on drop.
pub struct BusyGuard(Arc<SessionSlot>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

impl SessionSlot {
    pub fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn try_begin(self: &Arc<Self>) -> ApiResult<BusyGuard> {
        if self.busy.swap(true, Ordering::AcqRel) {
            return Err(ApiError::busy());
        }
        Ok(BusyGuard(self.clone()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SessionRecord {
    id: String,
    model_id: String,
    params: SessionParams,
    created_at: u64,
    updated_at: u64,
}

pub struct AppState {
    pub config: Config,
    models: RwLock<HashMap<String, Arc<Model>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Parses an upload and describes it. Centering happens here, once.
pub fn parse_model(bytes: &[u8], format: MeshFormat, model_id: String) -> Result<Model, MeshError> {
    let mesh = load_mesh(bytes, format)?;
    let bbox = bounding_box(&mesh).ok().map(|(lo, hi)| BoundingBox {
        min: [lo.x, lo.y, lo.z],
        max: [hi.x, hi.y, hi.z],
    });
    let info = ModelInfo {
        model_id,
        format: format.extension().to_owned(),
        vertex_count: mesh.vertex_count(),
        triangle_count: mesh.triangle_count(),
        bbox,
        watertight: mesh.is_watertight(),
    };
    let mesh = prepare_mesh(&mesh).map_err(|e| MeshError::MalformedFile(e.to_string()))?;
    Ok(Model {
        info,
        mesh: Arc::new(mesh),
    })
}

pub fn model_id_for(bytes: &[u8], format: MeshFormat) -> String {
    format!("{}-{}", &sha256_hex(bytes)[..32], format.extension())
}

fn spool_path(dir: &Path, model_id: &str) -> Option<PathBuf> {
    let (hash, ext) = model_id.rsplit_once('-')?;
    let valid = hash.len() == 32 && hash.bytes().all(|b| b.is_ascii_hexdigit()) && MeshFormat::from_extension(ext).is_some();
    valid.then(|| dir.join(format!("{model_id}.{ext}")))
}

impl AppState {
    pub fn new(config: Config) -> std::io::Result<Self> {
        std::fs::create_dir_all(&config.spool_dir)?;
        Ok(Self {
            config,
            models: RwLock::default(),
            sessions: RwLock::default(),
        })
    }

    /// Stores an upload under its content hash. Re-uploading the same bytes
    /// returns the existing model.
    pub fn insert_model(&self, bytes: &[u8], format: MeshFormat) -> ApiResult<Arc<Model>> {
        let id = model_id_for(bytes, format);
        if let Some(m) = self.models.read().unwrap().get(&id) {
            return Ok(m.clone());
        }
        let model = parse_model(bytes, format, id.clone()).map_err(|e| match e {
            MeshError::UnsupportedFeature(_) => ApiError::bad_request("unsupported_feature", e.to_string()),
            _ => ApiError::bad_request("malformed_file", e.to_string()),
        })?;
        let path = spool_path(&self.config.spool_dir, &id).expect("model ids are well formed");
        let tmp = path.with_extension("part");
        std::fs::write(&tmp, bytes)
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(format!("spooling model: {e}")))?;
        let model = Arc::new(model);
        self.models.write().unwrap().insert(id, model.clone());
        Ok(model)
    }

    /// Looks a model up in memory, then in the spool directory.
    pub fn model(&self, id: &str) -> ApiResult<Arc<Model>> {
        if let Some(m) = self.models.read().unwrap().get(id) {
            return Ok(m.clone());
        }
        let unknown = || ApiError::not_found("unknown_model", format!("no model {id}"));
        let path = spool_path(&self.config.spool_dir, id).ok_or_else(unknown)?;
        let bytes = std::fs::read(&path).map_err(|_| unknown())?;
        let format = MeshFormat::from_path(&path).ok_or_else(unknown)?;
        let model = parse_model(&bytes, format, id.to_owned()).map_err(|e| ApiError::internal(format!("spooled model {id}: {e}")))?;
        let model = Arc::new(model);
        self.models.write().unwrap().insert(id.to_owned(), model.clone());
        Ok(model)
    }

    pub fn create_session(&self, model_id: &str) -> ApiResult<Arc<SessionSlot>> {
        self.model(model_id)?;
        let now = now_ms();
        let session = Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            model_id: model_id.to_owned(),
            params: SessionParams::with_supersample(self.config.supersample),
            created_at: now,
            updated_at: now,
            generated: None,
        };
        Ok(self.add_session(session))
    }

    fn add_session(&self, session: Session) -> Arc<SessionSlot> {
        let id = session.id.clone();
        let slot = Arc::new(SessionSlot {
            busy: AtomicBool::new(false),
            inner: Mutex::new(session),
        });
        self.sessions.write().unwrap().insert(id, slot.clone());
        slot
    }

    pub fn session(&self, id: &str) -> ApiResult<Arc<SessionSlot>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Runs the pipeline for the session's current parameters, or returns
    /// the cached run. Blocking; call from a worker thread.
    pub fn generate_blocking(&self, slot: &SessionSlot) -> ApiResult<Arc<Generated>> {
        let (id, model_id, params) = {
            let s = slot.lock();
            if let Some(g) = s.current() {
                return Ok(g);
            }
            (s.id.clone(), s.model_id.clone(), s.params)
        };
        let model = self.model(&model_id)?;
        let generated = Arc::new(Generated::build(&id, params, &model.mesh)?);
        let mut s = slot.lock();
        // a PATCH that landed mid-run makes this result stale; still return it
        if s.params == params {
            s.generated = Some(generated.clone());
        }
        Ok(generated)
    }

    pub fn write_snapshot(&self, path: &Path) -> std::io::Result<()> {
        let records: Vec<SessionRecord> = self
            .sessions
            .read()
            .unwrap()
            .values()
            .map(|slot| {
                let s = slot.lock();
                SessionRecord {
                    id: s.id.clone(),
                    model_id: s.model_id.clone(),
                    params: s.params,
                    created_at: s.created_at,
                    updated_at: s.updated_at,
                }
            })
            .collect();
        let tmp = path.with_extension("part");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&records)?)?;
        std::fs::rename(tmp, path)
    }

    /// Restores sessions; records whose model is gone or whose parameters
    /// no longer validate are skipped. Returns how many were restored.
    pub fn load_snapshot(&self, path: &Path) -> std::io::Result<usize> {
        let records: Vec<SessionRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
        let mut restored = 0;
        for r in records {
            if r.params.validate().is_err() || self.model(&r.model_id).is_err() {
                tracing::warn!(session = %r.id, "dropping unrestorable session");
                continue;
            }
            self.add_session(Session {
                id: r.id,
                model_id: r.model_id,
                params: r.params,
                created_at: r.created_at,
                updated_at: r.updated_at,
                generated: None,
            });
            restored += 1;
        }
        Ok(restored)
    }
}
