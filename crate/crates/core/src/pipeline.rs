//! The generation pipeline: rotate, render both cameras, pool, build the
//! block map, split, then export.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block_map::{build_block_map, split_regions, BlockMap, BlockMapError, Label, LabelCounts};
use crate::depth::{column_maps, DepthError};
use crate::export::{extract_region_mesh, extract_slices, SliceStack};
use crate::gap::{gap_volume, GapError, GapReport};
use crate::mesh::{center_mesh, rotate_mesh, EulerAngles, MeshError, TriangleMesh};
use crate::space::DesignSpace;

pub const DEFAULT_SUPERSAMPLE: u32 = 8;

/// Whether per-triangle and per-column work fans out over rayon. Results
/// are bit-identical either way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error(transparent)]
    BlockMap(#[from] BlockMapError),
    #[error("rotation angles must be finite")]
    NonFiniteAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub space: DesignSpace,
    pub angles: EulerAngles,
    pub supersample: u32,
}

impl GenerateParams {
    pub fn new(space: DesignSpace, angles: EulerAngles, supersample: u32) -> Self {
        Self {
            space,
            angles,
            supersample,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.angles.is_finite() {
            return Err(PipelineError::NonFiniteAngles);
        }
        if self.supersample == 0 {
            return Err(DepthError::ZeroSupersample.into());
        }
        Ok(())
    }
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self::new(DesignSpace::default(), EulerAngles::ZERO, DEFAULT_SUPERSAMPLE)
    }
}

/// Centers a freshly loaded mesh. Rotation is always about this center.
pub fn prepare_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh, PipelineError> {
    if mesh.is_empty() {
        return Ok(mesh.clone());
    }
    Ok(center_mesh(mesh)?)
}

/// The unsplit block map of the rotated mesh; this is what the rotation
/// search scores.
pub fn unsplit_block_map(mesh: &TriangleMesh, params: &GenerateParams, par: Parallelism) -> Result<BlockMap, PipelineError> {
    params.validate()?;
    let rotated;
    let posed = if params.angles == EulerAngles::ZERO {
        mesh
    } else {
        rotated = rotate_mesh(mesh, params.angles);
        &rotated
    };
    let (a, b) = column_maps(posed, &params.space, params.supersample, par)?;
    Ok(build_block_map(&a, &b, &params.space)?)
}

/// The timed step: everything up to and including the split.
pub fn generate_block_map(mesh: &TriangleMesh, params: &GenerateParams, par: Parallelism) -> Result<BlockMap, PipelineError> {
    Ok(split_regions(&unsplit_block_map(mesh, params, par)?))
}

#[derive(Debug, Clone)]
pub struct FoamResult {
    pub params: GenerateParams,
    pub block_map: BlockMap,
    pub mesh_plus: TriangleMesh,
    pub mesh_minus: TriangleMesh,
    pub slices: SliceStack,
    /// Wall clock of [`generate_block_map`] only.
    pub timing_ms: f64,
    /// Measured against the rotated mesh; unavailable for open meshes.
    pub gap: Result<GapReport, GapError>,
}

impl FoamResult {
    pub fn counts(&self) -> LabelCounts {
        self.block_map.counts()
    }

    /// Foam blocks over all blocks.
    pub fn score(&self) -> f64 {
        self.counts().total_foam() as f64 / self.block_map.space().block_count() as f64
    }
}

/// Full generation on an already centered mesh.
pub fn generate(mesh: &TriangleMesh, params: &GenerateParams, par: Parallelism) -> Result<FoamResult, PipelineError> {
    let start = Instant::now();
    let block_map = generate_block_map(mesh, params, par)?;
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;

    let gap = if mesh.is_empty() {
        Ok(GapReport {
            occupied_blocks: 0,
            solid_blocks: 0,
            gap_blocks: 0,
            gap_mm3: 0.0,
        })
    } else {
        gap_volume(&block_map, &rotate_mesh(mesh, params.angles), par)
    };
    Ok(FoamResult {
        params: *params,
        mesh_plus: extract_region_mesh(&block_map, Label::FoamPlus),
        mesh_minus: extract_region_mesh(&block_map, Label::FoamMinus),
        slices: extract_slices(&block_map),
        block_map,
        timing_ms,
        gap,
    })
}
