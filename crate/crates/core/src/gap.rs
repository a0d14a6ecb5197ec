//! Solid voxelization by ray-crossing parity, and the gap between it and
//! the block map's occupied set.
//!
//! A block is solid when its center is inside the mesh, decided by
//! counting surface crossings along +x from the center. The block map
//! over-claims wherever ±x cameras cannot see (holes, undercuts) and at
//! the conservative surface rounding; the gap counts that excess.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block_map::{BlockMap, Label};
use crate::mesh::TriangleMesh;
use crate::pipeline::Parallelism;
use crate::space::DesignSpace;

/// Retries with the ray nudged by `bz / 1000` along z before giving up.
pub const MAX_PERTURBATIONS: u32 = 3;
const BARY_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error("gap volume needs a watertight mesh")]
    Unavailable,
    #[error("ray through column ({j}, {k}) grazes an edge after {MAX_PERTURBATIONS} perturbations")]
    DegenerateRay { j: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub occupied_blocks: usize,
    pub solid_blocks: usize,
    /// `occupied − solid`; can be negative where a thin part contains a
    /// block center but escapes every depth texel.
    pub gap_blocks: i64,
    pub gap_mm3: f64,
}

/// Column-contiguous solid flags, laid out like [`BlockMap`] labels.
pub fn solid_voxels(mesh: &TriangleMesh, space: &DesignSpace, par: Parallelism) -> Result<Vec<bool>, GapError> {
    if !mesh.is_watertight() {
        return Err(GapError::Unavailable);
    }
    let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
    let [_, by, bz] = space.block_size();
    let nudge = bz / 1000.0;

    // Bin triangles by the column center lines they can cross.
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); ny * nz];
    let span = |axis: usize, n: usize, lo: f64, hi: f64| {
        let b = space.block_size()[axis];
        let origin = -0.5 * space.extents()[axis];
        let first = ((lo - origin) / b - 0.5).ceil().max(0.0);
        let last = ((hi - origin) / b - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    };
    for (t, [p0, p1, p2]) in mesh.iter_triangles().enumerate() {
        let (ylo, yhi) = (p0.y.min(p1.y).min(p2.y), p0.y.max(p1.y).max(p2.y));
        let (zlo, zhi) = (p0.z.min(p1.z).min(p2.z), p0.z.max(p1.z).max(p2.z));
        let slack = by.min(bz) * 1e-9;
        let Some((j0, j1)) = span(1, ny, ylo - slack, yhi + slack) else { continue };
        let Some((k0, k1)) = span(2, nz, zlo - MAX_PERTURBATIONS as f64 * nudge - slack, zhi + slack) else {
            continue;
        };
        for j in j0..=j1 {
            for k in k0..=k1 {
                bins[j * nz + k].push(t as u32);
            }
        }
    }

    let column = |c: usize| -> Result<Vec<bool>, GapError> {
        let (j, k) = (c / nz, c % nz);
        let y = space.block_center(1, j);
        for attempt in 0..=MAX_PERTURBATIONS {
            let z = space.block_center(2, k) + attempt as f64 * nudge;
            if let Some(mut xs) = crossings(mesh, &bins[c], y, z) {
                xs.sort_by(f64::total_cmp);
                return Ok((0..nx)
                    .map(|i| {
                        let x = space.block_center(0, i);
                        let above = xs.len() - xs.partition_point(|&h| h <= x);
                        above % 2 == 1
                    })
                    .collect());
            }
        }
        Err(GapError::DegenerateRay { j, k })
    };
    let columns: Vec<Vec<bool>> = match par {
        Parallelism::Sequential => (0..ny * nz).map(column).collect::<Result<_, _>>()?,
        Parallelism::Parallel => (0..ny * nz).into_par_iter().map(column).collect::<Result<_, _>>()?,
    };
    Ok(columns.concat())
}

/// x coordinates where the line `(·, y, z)` crosses the listed triangles,
/// or `None` if it touches an edge or vertex.
fn crossings(mesh: &TriangleMesh, triangles: &[u32], y: f64, z: f64) -> Option<Vec<f64>> {
    let mut xs = Vec::new();
    for &t in triangles {
        let [p0, p1, p2] = mesh.triangle(t as usize);
        let area = (p1.y - p0.y) * (p2.z - p0.z) - (p1.z - p0.z) * (p2.y - p0.y);
        if area == 0.0 {
            // edge-on: only a problem if the line runs along it
            let on_segment = |a: &nalgebra::Point3<f64>, b: &nalgebra::Point3<f64>| {
                let (dy, dz) = (b.y - a.y, b.z - a.z);
                let len2 = dy * dy + dz * dz;
                let cross = dy * (z - a.z) - dz * (y - a.y);
                if len2 == 0.0 {
                    return (y - a.y).abs() + (z - a.z).abs() <= 1e-12;
                }
                let s = (dy * (y - a.y) + dz * (z - a.z)) / len2;
                cross * cross <= 1e-20 * len2 && (-1e-12..=1.0 + 1e-12).contains(&s)
            };
            if on_segment(&p0, &p1) || on_segment(&p1, &p2) || on_segment(&p2, &p0) {
                return None;
            }
            continue;
        }
        let inv = 1.0 / area;
        let w0 = ((p2.y - p1.y) * (z - p1.z) - (p2.z - p1.z) * (y - p1.y)) * inv;
        let w1 = ((p0.y - p2.y) * (z - p2.z) - (p0.z - p2.z) * (y - p2.y)) * inv;
        let w2 = 1.0 - w0 - w1;
        let lowest = w0.min(w1).min(w2);
        if lowest < -BARY_EPS {
            continue;
        }
        if lowest <= BARY_EPS {
            return None;
        }
        xs.push(w0 * p0.x + w1 * p1.x + w2 * p2.x);
    }
    Some(xs)
}

/// Occupied blocks minus solid blocks, in blocks and mm³.
pub fn gap_volume(bm: &BlockMap, mesh: &TriangleMesh, par: Parallelism) -> Result<GapReport, GapError> {
    let solid = solid_voxels(mesh, bm.space(), par)?;
    let occupied_blocks = bm.labels().iter().filter(|&&l| l == Label::Occupied).count();
    let solid_blocks = solid.iter().filter(|&&s| s).count();
    let gap_blocks = occupied_blocks as i64 - solid_blocks as i64;
    Ok(GapReport {
        occupied_blocks,
        solid_blocks,
        gap_blocks,
        gap_mm3: gap_blocks as f64 * bm.space().block_volume(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::column_maps;
    use crate::shapes;
    use crate::build_block_map;

    fn block_map(mesh: &TriangleMesh, space: &DesignSpace) -> BlockMap {
        let (a, b) = column_maps(mesh, space, 8, Parallelism::Sequential).unwrap();
        build_block_map(&a, &b, space).unwrap()
    }

    #[test]
    fn aligned_box_solid_set() {
        let space = DesignSpace::new([8, 6, 6], [10.0; 3]).unwrap();
        // blocks {2..5} × {1..4} × {1..4}
        let m = shapes::cuboid([-20.0, -20.0, -20.0], [20.0, 20.0, 20.0]);
        let solid = solid_voxels(&m, &space, Parallelism::Sequential).unwrap();
        let bm = block_map(&m, &space);
        for j in 0..6 {
            for k in 0..6 {
                for i in 0..8 {
                    let inside = (2..6).contains(&i) && (1..5).contains(&j) && (1..5).contains(&k);
                    assert_eq!(solid[bm.index(i, j, k)], inside);
                }
            }
        }
        // the occupied run also claims the blocks touching x = ±20
        let report = gap_volume(&bm, &m, Parallelism::Sequential).unwrap();
        assert_eq!(report.solid_blocks, 64);
        assert_eq!(report.occupied_blocks, 96);
        assert_eq!(report.gap_blocks, 32);
        assert_eq!(report.gap_mm3, 32_000.0);
    }

    #[test]
    fn non_watertight_is_unavailable() {
        let space = DesignSpace::new([4, 4, 4], [1.0; 3]).unwrap();
        let m = shapes::cuboid([0.0; 3], [1.0; 3]);
        let open = TriangleMesh::new(m.vertices().to_vec(), m.triangles()[..11].to_vec()).unwrap();
        assert_eq!(solid_voxels(&open, &space, Parallelism::Sequential), Err(GapError::Unavailable));
    }

    #[test]
    fn edge_hit_is_perturbed() {
        // The diagonal of each cube face triangulation passes through the
        // column center at (5, 5); the nudged ray resolves it.
        let space = DesignSpace::new([2, 2, 2], [10.0; 3]).unwrap();
        let m = shapes::cuboid([-10.0; 3], [10.0; 3]);
        let solid = solid_voxels(&m, &space, Parallelism::Sequential).unwrap();
        assert!(solid.iter().all(|&s| s));
    }

    #[test]
    fn tiny_tetrahedra() {
        let space = DesignSpace::new([4, 4, 4], [16.0; 3]).unwrap();
        // texel pitch is 2 mm at s = 8, with centers at odd millimeters;
        // the column center (8, 8) sits between texel centers
        let around_center = shapes::tetrahedron([
            [8.5, 8.5, 8.5],
            [8.5, 7.5, 7.5],
            [7.5, 8.5, 7.5],
            [7.5, 7.5, 8.5],
        ]);
        let bm = block_map(&around_center, &space);
        let r = gap_volume(&bm, &around_center, Parallelism::Sequential).unwrap();
        assert_eq!((r.occupied_blocks, r.solid_blocks, r.gap_blocks), (0, 1, -1));

        let off_center = shapes::tetrahedron([
            [2.2, 2.2, 2.2],
            [2.8, 2.3, 2.3],
            [2.3, 2.8, 2.3],
            [2.3, 2.3, 2.8],
        ]);
        let bm = block_map(&off_center, &space);
        let r = gap_volume(&bm, &off_center, Parallelism::Sequential).unwrap();
        assert_eq!((r.occupied_blocks, r.solid_blocks, r.gap_blocks), (0, 0, 0));
    }

    #[test]
    fn parallel_matches_sequential() {
        let space = DesignSpace::new([12, 12, 12], [5.0; 3]).unwrap();
        let m = shapes::torus(18.0, 7.0, 40, 20);
        assert_eq!(
            solid_voxels(&m, &space, Parallelism::Sequential).unwrap(),
            solid_voxels(&m, &space, Parallelism::Parallel).unwrap()
        );
    }
}
