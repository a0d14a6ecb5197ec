//! JSON bodies exchanged with the foamforge service, and the byte encodings
//! of every downloadable artifact. The CLI writes files through the same
//! functions the service serves them with, so both produce identical bytes.

use foamforge_core::block_map::LabelCounts;
use foamforge_core::gap::{GapError, GapReport};
use foamforge_core::pipeline::{GenerateParams, DEFAULT_SUPERSAMPLE};
use foamforge_core::{
    render_slice_svg, write_mesh, DesignSpace, EulerAngles, FoamResult, Label, OptimizerConfig, OutputFormat, ScoreReport,
    SliceStack, TriangleMesh,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use foamforge_core::export::SliceStackJson;

/// Bumped whenever a field of [`GenerateReport`] changes meaning.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Largest accepted supersample factor; 64² texels per column is already
/// far past the point of diminishing returns.
pub const MAX_SUPERSAMPLE: u32 = 64;

pub const TIMING_SCOPE: &str = "rotate, render both cameras, pool to blocks, build block map, split; excludes parsing and export";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("invalid design space: {0}")]
    Space(#[from] foamforge_core::space::SpaceError),
    #[error("rotation angles must be finite")]
    NonFiniteAngles,
    #[error("supersample must be between 1 and {MAX_SUPERSAMPLE}, got {0}")]
    Supersample(u32),
}

/// The tunable state of a session: the design space, the pose, and the
/// depth sampling density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub resolution: [u32; 3],
    pub block_size_mm: [f64; 3],
    pub angles_deg: EulerAngles,
    pub supersample: u32,
}

impl Default for SessionParams {
    fn default() -> Self {
        Self::with_supersample(DEFAULT_SUPERSAMPLE)
    }
}

impl SessionParams {
    pub fn with_supersample(supersample: u32) -> Self {
        let space = DesignSpace::default();
        Self {
            resolution: space.resolution(),
            block_size_mm: space.block_size(),
            angles_deg: EulerAngles::ZERO,
            supersample,
        }
    }

    pub fn space(&self) -> Result<DesignSpace, ParamsError> {
        Ok(DesignSpace::new(self.resolution, self.block_size_mm)?)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        self.space()?;
        if !self.angles_deg.is_finite() {
            return Err(ParamsError::NonFiniteAngles);
        }
        if !(1..=MAX_SUPERSAMPLE).contains(&self.supersample) {
            return Err(ParamsError::Supersample(self.supersample));
        }
        Ok(())
    }

    pub fn generate_params(&self) -> Result<GenerateParams, ParamsError> {
        self.validate()?;
        Ok(GenerateParams::new(self.space()?, self.angles_deg, self.supersample))
    }
}

/// Body of `PATCH /api/sessions/{id}/params`; absent fields keep their value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[u32; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size_mm: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<EulerAngles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersample: Option<u32>,
}

impl ParamsPatch {
    pub fn apply(&self, base: &SessionParams) -> Result<SessionParams, ParamsError> {
        let next = SessionParams {
            resolution: self.resolution.unwrap_or(base.resolution),
            block_size_mm: self.block_size_mm.unwrap_or(base.block_size_mm),
            angles_deg: self.angles_deg.unwrap_or(base.angles_deg),
            supersample: self.supersample.unwrap_or(base.supersample),
        };
        next.validate()?;
        Ok(next)
    }

    pub fn from_params(p: &SessionParams) -> Self {
        Self {
            resolution: Some(p.resolution),
            block_size_mm: Some(p.block_size_mm),
            angles_deg: Some(p.angles_deg),
            supersample: Some(p.supersample),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub format: String,
    pub vertex_count: usize,
    pub triangle_count: usize,
    /// As uploaded, before centering.
    pub bbox: Option<BoundingBox>,
    pub watertight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDto {
    pub id: String,
    pub model_id: String,
    pub params: SessionParams,
    pub generated: bool,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

/// Optional body of `POST /api/sessions/{id}/optimize-angle`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u32>,
}

impl OptimizeRequest {
    pub fn config(&self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            step: self.step.unwrap_or(d.step),
            max_rounds: self.max_rounds.unwrap_or(d.max_rounds),
        }
    }
}

/// How the gap figures are derived; shipped with every report because the
/// metric is this project's own definition.
pub const GAP_DEFINITION: &str = "occupied blocks minus blocks whose center is inside the solid";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub available: bool,
    pub definition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<GapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Result<GapReport, GapError>> for GapSummary {
    fn from(gap: &Result<GapReport, GapError>) -> Self {
        match gap {
            Ok(r) => Self {
                available: true,
                definition: GAP_DEFINITION.into(),
                report: Some(*r),
                reason: None,
            },
            Err(e) => Self {
                available: false,
                definition: GAP_DEFINITION.into(),
                report: None,
                reason: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactLinks {
    pub plus_stl: String,
    pub minus_stl: String,
    pub plus_ply: String,
    pub minus_ply: String,
    pub slices: String,
    pub block_map: String,
}

impl ArtifactLinks {
    pub fn for_session(id: &str) -> Self {
        let base = format!("/api/sessions/{id}");
        Self {
            plus_stl: format!("{base}/foam/plus.stl"),
            minus_stl: format!("{base}/foam/minus.stl"),
            plus_ply: format!("{base}/foam/plus.ply"),
            minus_ply: format!("{base}/foam/minus.ply"),
            slices: format!("{base}/slices"),
            block_map: format!("{base}/block-map.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub params: SessionParams,
    pub foam_blocks: usize,
    pub occupied_blocks: usize,
    pub counts: LabelCounts,
    /// Foam blocks over all blocks.
    #[serde(rename = "F")]
    pub f: f64,
    pub one_sided_columns: usize,
    pub gap_report: GapSummary,
    pub timing_ms: f64,
    pub links: ArtifactLinks,
}

impl GenerateSummary {
    pub fn new(session_id: &str, params: SessionParams, result: &FoamResult) -> Self {
        let counts = result.counts();
        Self {
            params,
            foam_blocks: counts.total_foam(),
            occupied_blocks: counts.occupied,
            counts,
            f: result.score(),
            one_sided_columns: result.block_map.one_sided_columns(),
            gap_report: (&result.gap).into(),
            timing_ms: result.timing_ms,
            links: ArtifactLinks::for_session(session_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// Stable machine-readable code, e.g. `unknown_session`.
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

/// `report.json` written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub schema_version: u32,
    pub input: String,
    pub params: SessionParams,
    #[serde(rename = "F")]
    pub f: f64,
    pub counts: LabelCounts,
    pub foam_blocks: usize,
    pub occupied_blocks: usize,
    pub one_sided_columns: usize,
    pub gap: GapSummary,
    pub timing_ms: f64,
    pub timing_scope: String,
    pub optimize: Option<ScoreReport>,
    pub outputs: Vec<String>,
}

/// One of the two foam halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Plus,
    Minus,
}

impl Region {
    pub const BOTH: [Region; 2] = [Region::Plus, Region::Minus];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Plus => "plus",
            Region::Minus => "minus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plus" => Some(Region::Plus),
            "minus" => Some(Region::Minus),
            _ => None,
        }
    }

    pub fn label(self) -> Label {
        match self {
            Region::Plus => Label::FoamPlus,
            Region::Minus => Label::FoamMinus,
        }
    }

    pub fn mesh(self, result: &FoamResult) -> &TriangleMesh {
        match self {
            Region::Plus => &result.mesh_plus,
            Region::Minus => &result.mesh_minus,
        }
    }
}

pub fn foam_file_name(region: Region, format: OutputFormat) -> String {
    format!("foam_{}.{}", region.as_str(), format.extension())
}

pub fn slice_file_name(i: usize) -> String {
    format!("slice_{i:03}.svg")
}

pub fn foam_bytes(result: &FoamResult, region: Region, format: OutputFormat) -> Vec<u8> {
    write_mesh(region.mesh(result), format)
}

pub fn slices_json_bytes(stack: &SliceStack) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&stack.to_json()).expect("slice stack serializes");
    out.push(b'\n');
    out
}

pub fn slice_svg_bytes(stack: &SliceStack, i: usize) -> Option<Vec<u8>> {
    render_slice_svg(stack, i).ok().map(String::into_bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Strong entity tag over the exact response bytes.
pub fn etag(bytes: &[u8]) -> String {
    format!("\"{}\"", &sha256_hex(bytes)[..32])
}
