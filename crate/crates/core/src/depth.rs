//! Orthographic depth textures along ±x and their conservative reduction to
//! block resolution.
//!
//! A texel `(u, v)` stands for the ray of constant `(y, z)` through the
//! texel center. The +x camera records the largest x at which that ray
//! meets the surface, the −x camera the smallest. Texels are
//! `by/s × bz/s` millimeters, so each block column covers `s × s` texels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::pipeline::Parallelism;
use crate::space::DesignSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    PlusX,
    MinusX,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("texture is {actual:?} texels but the design space needs {expected:?}")]
    DimensionMismatch { expected: [usize; 2], actual: [usize; 2] },
    #[error("supersample factor must be at least 1")]
    ZeroSupersample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthTexture {
    direction: Direction,
    width: usize,
    height: usize,
    supersample: u32,
    x_range: [f64; 2],
    // row-major in v (z), NaN where the ray misses
    values: Vec<f64>,
}

impl DepthTexture {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Texels along y.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Texels along z.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn supersample(&self) -> u32 {
        self.supersample
    }

    /// First-hit x coordinate, or `None` when the ray misses the object.
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let d = self.values[v * self.width + u];
        (!d.is_nan()).then_some(d)
    }

    pub fn hit_count(&self) -> usize {
        self.values.iter().filter(|d| !d.is_nan()).count()
    }

    /// Builds a texture from explicit values (`None` = no hit). Mostly for
    /// tests and tools that synthesize depth data.
    pub fn from_values(
        direction: Direction,
        space: &DesignSpace,
        supersample: u32,
        values: Vec<Option<f64>>,
    ) -> Result<Self, DepthError> {
        let (width, height) = texture_size(space, supersample)?;
        if values.len() != width * height {
            return Err(DepthError::DimensionMismatch {
                expected: [width, height],
                actual: [values.len(), 1],
            });
        }
        let half = 0.5 * space.extents()[0];
        Ok(Self {
            direction,
            width,
            height,
            supersample,
            x_range: [-half, half],
            values: values
                .into_iter()
                .map(|v| v.map_or(f64::NAN, |d| d.clamp(-half, half)))
                .collect(),
        })
    }

    /// 16-bit binary PGM for eyeballing. 0 is no hit; hits map linearly
    /// from the −x face (1) to the +x face (65535). Top row is max z.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        let [lo, hi] = self.x_range;
        for v in (0..self.height).rev() {
            for u in 0..self.width {
                let level = match self.get(u, v) {
                    None => 0u16,
                    Some(d) => 1 + ((d - lo) / (hi - lo) * 65534.0).round() as u16,
                };
                out.extend_from_slice(&level.to_be_bytes());
            }
        }
        out
    }
}

/// Per block column `(j, k)`, the x block index of the visible surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDepthMap {
    direction: Direction,
    ny: usize,
    nz: usize,
    // column-major: j * nz + k
    cells: Vec<Option<u32>>,
}

impl ColumnDepthMap {
    /// `cells` are indexed `j * nz + k`.
    pub fn new(direction: Direction, ny: usize, nz: usize, cells: Vec<Option<u32>>) -> Self {
        assert_eq!(cells.len(), ny * nz, "column count");
        Self {
            direction,
            ny,
            nz,
            cells,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.ny, self.nz]
    }

    pub fn get(&self, j: usize, k: usize) -> Option<u32> {
        self.cells[j * self.nz + k]
    }

    pub fn cells(&self) -> &[Option<u32>] {
        &self.cells
    }
}

fn texture_size(space: &DesignSpace, supersample: u32) -> Result<(usize, usize), DepthError> {
    if supersample == 0 {
        return Err(DepthError::ZeroSupersample);
    }
    let s = supersample as usize;
    Ok((space.ny() * s, space.nz() * s))
}

struct Raster {
    width: usize,
    height: usize,
    origin: [f64; 2],
    texel: [f64; 2],
    x_half: f64,
}

impl Raster {
    fn new(space: &DesignSpace, supersample: u32) -> Result<Self, DepthError> {
        let (width, height) = texture_size(space, supersample)?;
        let [w, h, d] = space.extents();
        let [_, by, bz] = space.block_size();
        Ok(Self {
            width,
            height,
            origin: [-0.5 * h, -0.5 * d],
            texel: [by / supersample as f64, bz / supersample as f64],
            x_half: 0.5 * w,
        })
    }

    /// Inclusive texel index range whose centers fall in `[lo, hi]` along
    /// texture axis `a`.
    fn texel_span(&self, a: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let n = if a == 0 { self.width } else { self.height };
        let first = ((lo - self.origin[a]) / self.texel[a] - 0.5).ceil().max(0.0);
        let last = ((hi - self.origin[a]) / self.texel[a] - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    }

    /// Folds the triangles into running max (+x camera) and min (−x
    /// camera) buffers. Misses stay at ∓∞.
    fn rasterize(&self, mesh: &TriangleMesh, triangles: &[[u32; 3]], max: &mut [f64], min: &mut [f64]) {
        let verts = mesh.vertices();
        for tri in triangles {
            let [p0, p1, p2] = tri.map(|i| verts[i as usize]);
            let area = (p1.y - p0.y) * (p2.z - p0.z) - (p1.z - p0.z) * (p2.y - p0.y);
            if area == 0.0 {
                // edge-on to the camera; its neighbors carry the silhouette
                continue;
            }
            let inv = 1.0 / area;
            let Some((u0, u1)) = self.texel_span(0, p0.y.min(p1.y).min(p2.y), p0.y.max(p1.y).max(p2.y)) else {
                continue;
            };
            let Some((v0, v1)) = self.texel_span(1, p0.z.min(p1.z).min(p2.z), p0.z.max(p1.z).max(p2.z)) else {
                continue;
            };
            for v in v0..=v1 {
                let z = self.origin[1] + (v as f64 + 0.5) * self.texel[1];
                let row = v * self.width;
                for u in u0..=u1 {
                    let y = self.origin[0] + (u as f64 + 0.5) * self.texel[0];
                    let w0 = ((p2.y - p1.y) * (z - p1.z) - (p2.z - p1.z) * (y - p1.y)) * inv;
                    let w1 = ((p0.y - p2.y) * (z - p2.z) - (p0.z - p2.z) * (y - p2.y)) * inv;
                    let w2 = 1.0 - w0 - w1;
                    if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                        continue;
                    }
                    let x = (w0 * p0.x + w1 * p1.x + w2 * p2.x).clamp(-self.x_half, self.x_half);
                    let t = row + u;
                    if x > max[t] {
                        max[t] = x;
                    }
                    if x < min[t] {
                        min[t] = x;
                    }
                }
            }
        }
    }

    fn run(&self, mesh: &TriangleMesh, par: Parallelism) -> (Vec<f64>, Vec<f64>) {
        let n = self.width * self.height;
        let fresh = || (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
        match par {
            Parallelism::Sequential => {
                let (mut max, mut min) = fresh();
                self.rasterize(mesh, mesh.triangles(), &mut max, &mut min);
                (max, min)
            }
            Parallelism::Parallel => mesh
                .triangles()
                .par_chunks(4096)
                .fold(fresh, |(mut max, mut min), chunk| {
                    self.rasterize(mesh, chunk, &mut max, &mut min);
                    (max, min)
                })
                .reduce(fresh, |(mut max, mut min), (omax, omin)| {
                    for (a, b) in max.iter_mut().zip(omax) {
                        *a = a.max(b);
                    }
                    for (a, b) in min.iter_mut().zip(omin) {
                        *a = a.min(b);
                    }
                    (max, min)
                }),
        }
    }

    fn texture(&self, direction: Direction, supersample: u32, raw: Vec<f64>) -> DepthTexture {
        DepthTexture {
            direction,
            width: self.width,
            height: self.height,
            supersample,
            x_range: [-self.x_half, self.x_half],
            values: raw
                .into_iter()
                .map(|d| if d.is_finite() { d } else { f64::NAN })
                .collect(),
        }
    }
}

/// Renders one camera. Hits are clamped to the design space's x extent;
/// geometry outside the y/z footprint is not seen.
pub fn render_depth(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    direction: Direction,
    supersample: u32,
) -> Result<DepthTexture, DepthError> {
    let [plus, minus] = render_depth_pair(mesh, space, supersample, Parallelism::Sequential)?;
    Ok(match direction {
        Direction::PlusX => plus,
        Direction::MinusX => minus,
    })
}

/// Both cameras share rays, so one pass over the triangles fills both.
pub fn render_depth_pair(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    supersample: u32,
    par: Parallelism,
) -> Result<[DepthTexture; 2], DepthError> {
    let raster = Raster::new(space, supersample)?;
    let (max, min) = raster.run(mesh, par);
    Ok([
        raster.texture(Direction::PlusX, supersample, max),
        raster.texture(Direction::MinusX, supersample, min),
    ])
}

/// Pools each column's `s × s` texels into one block index.
///
/// +x keeps the largest hit and rounds an exact block boundary up to the
/// higher block; −x keeps the smallest and rounds a boundary down. Both
/// choices grow the occupied interval, never shrink it.
pub fn reduce_to_blocks(tex: &DepthTexture, space: &DesignSpace) -> Result<ColumnDepthMap, DepthError> {
    let (width, height) = texture_size(space, tex.supersample)?;
    if (tex.width, tex.height) != (width, height) {
        return Err(DepthError::DimensionMismatch {
            expected: [width, height],
            actual: [tex.width, tex.height],
        });
    }
    let s = tex.supersample as usize;
    let (ny, nz) = (space.ny(), space.nz());
    let mut cells = vec![None; ny * nz];
    for j in 0..ny {
        for k in 0..nz {
            let texels = (k * s..(k + 1) * s).flat_map(|v| (j * s..(j + 1) * s).map(move |u| (u, v)));
            let hits = texels.filter_map(|(u, v)| tex.get(u, v));
            let pooled = match tex.direction {
                Direction::PlusX => hits.reduce(f64::max),
                Direction::MinusX => hits.reduce(f64::min),
            };
            cells[j * nz + k] = pooled.map(|d| block_index(space, tex.direction, d));
        }
    }
    Ok(ColumnDepthMap::new(tex.direction, ny, nz, cells))
}

/// Block index along x for a surface depth, with the boundary rule above.
pub fn block_index(space: &DesignSpace, direction: Direction, x: f64) -> u32 {
    let t = (x + 0.5 * space.extents()[0]) / space.block_size()[0];
    let i = match direction {
        Direction::PlusX => t.floor(),
        Direction::MinusX => t.ceil() - 1.0,
    };
    i.clamp(0.0, space.nx() as f64 - 1.0) as u32
}

/// Renders and reduces both cameras: the A (+x) and B (−x) column maps.
pub fn column_maps(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    supersample: u32,
    par: Parallelism,
) -> Result<(ColumnDepthMap, ColumnDepthMap), DepthError> {
    let [plus, minus] = render_depth_pair(mesh, space, supersample, par)?;
    Ok((reduce_to_blocks(&plus, space)?, reduce_to_blocks(&minus, space)?))
}
