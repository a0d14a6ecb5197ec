//! Fabrication outputs: blocky boundary meshes for each foam half, and the
//! per-layer cross-sections perpendicular to x.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block_map::{BlockMap, Label, LabelCounts};
use crate::mesh::TriangleMesh;
use crate::space::DesignSpace;

pub const COLOR_FOAM_MINUS: &str = "#1f77b4";
pub const COLOR_FOAM_PLUS: &str = "#ff7f0e";
pub const COLOR_OCCUPIED: &str = "#ffffff";
pub const COLOR_OCCUPIED_STROKE: &str = "#808080";
pub const COLOR_UNSPLIT: &str = "#c7c7c7";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("layer {index} out of range for {nx} layers")]
    LayerOutOfRange { index: usize, nx: usize },
    #[error("slice stack does not match its design space: {0}")]
    Malformed(String),
}

// Corner bits: x = 1, y = 2, z = 4. Faces in id order −x, +x, −y, +y, −z, +z,
// each wound counter-clockwise seen from outside.
const FACE_QUADS: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Boundary of the blocks labeled `region`: one quad per block face whose
/// neighbor is outside the region or outside the design space. Quads do
/// not share vertices. Faces come out in `(i, j, k, face)` order.
pub fn extract_region_mesh(bm: &BlockMap, region: Label) -> TriangleMesh {
    let space = bm.space();
    let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
    let dims = [nx, ny, nz];
    let inside = |i: isize, j: isize, k: isize| {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && bm.get(i as usize, j as usize, k as usize) == region
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if bm.get(i, j, k) != region {
                    continue;
                }
                let cell = [i, j, k];
                let lo: [f64; 3] = [0, 1, 2].map(|a| space.block_min(a, cell[a]));
                let hi: [f64; 3] = [0, 1, 2].map(|a| space.block_min(a, cell[a] + 1));
                for (face, quad) in FACE_QUADS.iter().enumerate() {
                    let axis = face / 2;
                    let mut n = [i as isize, j as isize, k as isize];
                    n[axis] += if face % 2 == 0 { -1 } else { 1 };
                    debug_assert!(dims[axis] > 0);
                    if inside(n[0], n[1], n[2]) {
                        continue;
                    }
                    let base = vertices.len() as u32;
                    for &c in quad {
                        vertices.push(Point3::new(
                            if c & 1 == 0 { lo[0] } else { hi[0] },
                            if c & 2 == 0 { lo[1] } else { hi[1] },
                            if c & 4 == 0 { lo[2] } else { hi[2] },
                        ));
                    }
                    triangles.push([base, base + 1, base + 2]);
                    triangles.push([base, base + 2, base + 3]);
                }
            }
        }
    }
    if triangles.is_empty() {
        return TriangleMesh::empty();
    }
    TriangleMesh::new(vertices, triangles).expect("lattice quads are valid")
}

/// Checks that every undirected edge, keyed by endpoint coordinates, is
/// used an even number of times.
pub fn edges_balanced(mesh: &TriangleMesh) -> bool {
    let key = |p: &Point3<f64>| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
    let mut uses: HashMap<([u64; 3], [u64; 3]), u32> = HashMap::new();
    for tri in mesh.iter_triangles() {
        for e in 0..3 {
            let (a, b) = (key(&tri[e]), key(&tri[(e + 1) % 3]));
            *uses.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    uses.values().all(|n| n % 2 == 0)
}

/// Labels of each x layer, `j * nz + k` within a layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStack {
    space: DesignSpace,
    layers: Vec<Vec<Label>>,
}

impl SliceStack {
    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, i: usize) -> Option<&[Label]> {
        self.layers.get(i).map(Vec::as_slice)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Label {
        self.layers[i][j * self.space.nz() + k]
    }

    pub fn histogram(&self, i: usize) -> Option<LabelCounts> {
        self.layer(i).map(histogram)
    }

    /// Restacks the layers into a block map.
    pub fn to_block_map(&self) -> Result<BlockMap, crate::block_map::BlockMapError> {
        let (nx, ny, nz) = (self.space.nx(), self.space.ny(), self.space.nz());
        let mut labels = vec![Label::Foam; self.space.block_count()];
        for j in 0..ny {
            for k in 0..nz {
                for i in 0..nx {
                    labels[(j * nz + k) * nx + i] = self.get(i, j, k);
                }
            }
        }
        BlockMap::from_labels(self.space, labels, 0)
    }

    pub fn to_json(&self) -> SliceStackJson {
        let (ny, nz) = (self.space.ny(), self.space.nz());
        SliceStackJson {
            space: self.space,
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(index, layer)| SliceLayerJson {
                    index,
                    rows: (0..ny)
                        .map(|j| layer[j * nz..(j + 1) * nz].iter().map(|l| l.as_char()).collect())
                        .collect(),
                    histogram: histogram(layer),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SliceStackJson) -> Result<Self, ExportError> {
        let space = json.space;
        let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
        if json.layers.len() != nx {
            return Err(ExportError::Malformed(format!("{} layers, expected {nx}", json.layers.len())));
        }
        let mut layers = Vec::with_capacity(nx);
        for (i, layer) in json.layers.iter().enumerate() {
            if layer.index != i || layer.rows.len() != ny {
                return Err(ExportError::Malformed(format!("layer {i} has wrong index or row count")));
            }
            let mut labels = Vec::with_capacity(ny * nz);
            for row in &layer.rows {
                for ch in row.chars() {
                    labels.push(match ch {
                        'O' => Label::Occupied,
                        'F' => Label::Foam,
                        'P' => Label::FoamPlus,
                        'M' => Label::FoamMinus,
                        other => return Err(ExportError::Malformed(format!("label '{other}'"))),
                    });
                }
                if labels.len() % nz != 0 {
                    return Err(ExportError::Malformed(format!("row length in layer {i}")));
                }
            }
            if labels.len() != ny * nz {
                return Err(ExportError::Malformed(format!("layer {i} has {} cells", labels.len())));
            }
            layers.push(labels);
        }
        Ok(Self { space, layers })
    }
}

fn histogram(layer: &[Label]) -> LabelCounts {
    let mut c = LabelCounts::default();
    for &l in layer {
        match l {
            Label::Occupied => c.occupied += 1,
            Label::Foam => c.foam += 1,
            Label::FoamPlus => c.foam_plus += 1,
            Label::FoamMinus => c.foam_minus += 1,
        }
    }
    c
}

/// Wire form: one string per `j` row, one label character per `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStackJson {
    #[serde(flatten)]
    pub space: DesignSpace,
    pub layers: Vec<SliceLayerJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceLayerJson {
    pub index: usize,
    pub rows: Vec<String>,
    pub histogram: LabelCounts,
}

pub fn extract_slices(bm: &BlockMap) -> SliceStack {
    let space = *bm.space();
    let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
    let layers = (0..nx)
        .map(|i| {
            let mut layer = Vec::with_capacity(ny * nz);
            for j in 0..ny {
                for k in 0..nz {
                    layer.push(bm.get(i, j, k));
                }
            }
            layer
        })
        .collect();
    SliceStack { space, layers }
}

/// One layer as an SVG grid in millimeter user units: y runs right, z runs
/// up. −x foam is blue, +x foam orange, the object white with a grey rim.
pub fn render_slice_svg(stack: &SliceStack, i: usize) -> Result<String, ExportError> {
    let layer = stack.layer(i).ok_or(ExportError::LayerOutOfRange {
        index: i,
        nx: stack.len(),
    })?;
    let space = stack.space();
    let (ny, nz) = (space.ny(), space.nz());
    let [_, by, bz] = space.block_size();
    let [_, h, d] = space.extents();
    let stroke = by.min(bz) / 20.0;

    let mut svg = String::with_capacity(96 * ny * nz + 256);
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{h}mm\" height=\"{d}mm\" viewBox=\"0 0 {h} {d}\">"
    );
    let _ = writeln!(svg, "<desc>layer {i} of {}</desc>", stack.len());
    for j in 0..ny {
        for k in 0..nz {
            let x = j as f64 * by;
            let y = (nz - 1 - k) as f64 * bz;
            let _ = match layer[j * nz + k] {
                Label::Occupied => writeln!(
                    svg,
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{by}\" height=\"{bz}\" fill=\"{COLOR_OCCUPIED}\" stroke=\"{COLOR_OCCUPIED_STROKE}\" stroke-width=\"{stroke}\"/>"
                ),
                other => {
                    let fill = match other {
                        Label::FoamPlus => COLOR_FOAM_PLUS,
                        Label::FoamMinus => COLOR_FOAM_MINUS,
                        _ => COLOR_UNSPLIT,
                    };
                    writeln!(svg, "<rect x=\"{x}\" y=\"{y}\" width=\"{by}\" height=\"{bz}\" fill=\"{fill}\"/>")
                }
            };
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_map::{build_block_map, split_regions};
    use crate::depth::{ColumnDepthMap, Direction};
    use crate::io::write_stl_binary;
    use proptest::prelude::*;

    fn labels_map(space: DesignSpace, f: impl Fn(usize, usize, usize) -> Label) -> BlockMap {
        let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
        let mut labels = vec![Label::Foam; space.block_count()];
        for j in 0..ny {
            for k in 0..nz {
                for i in 0..nx {
                    labels[(j * nz + k) * nx + i] = f(i, j, k);
                }
            }
        }
        BlockMap::from_labels(space, labels, 0).unwrap()
    }

    fn all_foam_split(nx: u32, ny: u32, nz: u32) -> BlockMap {
        let s = DesignSpace::new([nx, ny, nz], [15.0, 15.0, 22.0]).unwrap();
        let n = (ny * nz) as usize;
        let a = ColumnDepthMap::new(Direction::PlusX, ny as usize, nz as usize, vec![None; n]);
        let b = ColumnDepthMap::new(Direction::MinusX, ny as usize, nz as usize, vec![None; n]);
        split_regions(&build_block_map(&a, &b, &s).unwrap())
    }

    #[test]
    fn single_block() {
        let s = DesignSpace::new([3, 3, 3], [15.0, 15.0, 22.0]).unwrap();
        let bm = labels_map(s, |i, j, k| if (i, j, k) == (1, 1, 1) { Label::FoamPlus } else { Label::Foam });
        let m = extract_region_mesh(&bm, Label::FoamPlus);
        assert_eq!(m.triangle_count(), 12);
        assert!((m.signed_volume() - 4950.0).abs() < 1e-9);
        assert_eq!(write_stl_binary(&m).len(), 684);
    }

    #[test]
    fn two_adjacent_blocks_share_no_face() {
        let s = DesignSpace::new([3, 3, 3], [15.0, 15.0, 22.0]).unwrap();
        let bm = labels_map(s, |i, j, k| {
            if (j, k) == (1, 1) && i < 2 {
                Label::FoamMinus
            } else {
                Label::Foam
            }
        });
        let m = extract_region_mesh(&bm, Label::FoamMinus);
        assert_eq!((m.triangle_count(), m.vertex_count()), (20, 40));
        assert!((m.signed_volume() - 2.0 * 4950.0).abs() < 1e-9);
        assert!(edges_balanced(&m));
        let ply = String::from_utf8(crate::io::write_ply_ascii(&m)).unwrap();
        assert!(ply.contains("element vertex 40\n") && ply.contains("element face 20\n"));
    }

    #[test]
    fn empty_region() {
        let bm = all_foam_split(4, 2, 2);
        let m = extract_region_mesh(&bm, Label::Occupied);
        assert!(m.is_empty());
        assert_eq!(write_stl_binary(&m).len(), 84);
    }

    #[test]
    fn all_foam_slices() {
        let stack = extract_slices(&all_foam_split(8, 3, 2));
        assert_eq!(stack.len(), 8);
        for i in 0..8 {
            let expected = if i < 4 { Label::FoamMinus } else { Label::FoamPlus };
            assert!(stack.layer(i).unwrap().iter().all(|&l| l == expected));
        }
    }

    #[test]
    fn svg_single_orange_cell() {
        let bm = labels_map(DesignSpace::new([1, 1, 1], [15.0, 15.0, 22.0]).unwrap(), |_, _, _| Label::FoamPlus);
        let svg = render_slice_svg(&extract_slices(&bm), 0).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);
        assert_eq!(svg.matches(COLOR_FOAM_PLUS).count(), 1);
        assert!(svg.contains("width=\"15mm\" height=\"22mm\""));
    }

    #[test]
    fn svg_uniform_blue_layer() {
        let stack = extract_slices(&all_foam_split(8, 18, 18));
        let svg = render_slice_svg(&stack, 0).unwrap();
        assert_eq!(svg.matches(&format!("fill=\"{COLOR_FOAM_MINUS}\"")).count(), 324);
        assert_eq!(svg.matches("<rect").count(), 324);
        assert_eq!(render_slice_svg(&stack, 0).unwrap(), svg);
    }

    #[test]
    fn svg_out_of_range() {
        let stack = extract_slices(&all_foam_split(2, 1, 1));
        assert_eq!(render_slice_svg(&stack, 2), Err(ExportError::LayerOutOfRange { index: 2, nx: 2 }));
    }

    #[test]
    fn slice_json_round_trip() {
        let stack = extract_slices(&all_foam_split(5, 3, 4));
        let text = serde_json::to_string(&stack.to_json()).unwrap();
        let back = SliceStack::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, stack);
        assert_eq!(stack.to_json().layers[4].rows[2], "PPPP");
    }

    /// Random label field: one contiguous occupied run per column (maybe
    /// empty) and arbitrary foam labels elsewhere.
    pub(crate) fn arb_label_field() -> impl Strategy<Value = BlockMap> {
        (1u32..7, 1u32..7, 1u32..7).prop_flat_map(|(nx, ny, nz)| {
            let s = DesignSpace::new([nx, ny, nz], [1.7, 2.3, 0.1]).unwrap();
            let foam = prop_oneof![Just(Label::Foam), Just(Label::FoamPlus), Just(Label::FoamMinus)];
            let runs = proptest::collection::vec((0..nx as usize, 0..=nx as usize), (ny * nz) as usize);
            (proptest::collection::vec(foam, s.block_count()), runs).prop_map(move |(mut labels, runs)| {
                let n = nx as usize;
                for (c, (start, len)) in runs.into_iter().enumerate() {
                    let end = (start + len / 2).min(n);
                    labels[c * n + start..c * n + end].fill(Label::Occupied);
                }
                BlockMap::from_labels(s, labels, 0).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn slices_restack_exactly(bm in arb_label_field()) {
            let stack = extract_slices(&bm);
            prop_assert_eq!(stack.to_block_map().unwrap(), bm);
        }

        #[test]
        fn region_meshes_are_closed_with_exact_volume(bm in arb_label_field()) {
            for region in [Label::FoamPlus, Label::FoamMinus, Label::Occupied] {
                let m = extract_region_mesh(&bm, region);
                let blocks = bm.labels().iter().filter(|&&l| l == region).count();
                let expected = blocks as f64 * bm.space().block_volume();
                prop_assert!((m.signed_volume() - expected).abs() <= 1e-6 * expected.max(1.0));
                prop_assert!(edges_balanced(&m));
            }
        }
    }
}
