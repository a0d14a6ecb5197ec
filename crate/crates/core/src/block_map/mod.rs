//! The block map: which blocks of the design space the object claims, and
//! how the remaining foam divides into the two halves of the case.

mod codec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::{ColumnDepthMap, Direction};
use crate::space::DesignSpace;

pub use codec::{BlockMapJson, CodecError, BLOB_MAGIC, BLOB_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    #[serde(rename = "O")]
    Occupied = 0,
    /// Foam not yet assigned to a half.
    #[serde(rename = "F")]
    Foam = 1,
    /// Foam pulled off along +x.
    #[serde(rename = "P")]
    FoamPlus = 2,
    /// Foam pulled off along −x.
    #[serde(rename = "M")]
    FoamMinus = 3,
}

impl Label {
    pub fn is_foam(self) -> bool {
        self != Label::Occupied
    }

    pub fn as_char(self) -> char {
        match self {
            Label::Occupied => 'O',
            Label::Foam => 'F',
            Label::FoamPlus => 'P',
            Label::FoamMinus => 'M',
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Label::Occupied),
            1 => Some(Label::Foam),
            2 => Some(Label::FoamPlus),
            3 => Some(Label::FoamMinus),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockMapError {
    #[error("expected a {expected:?} column map, got {actual:?}")]
    WrongDirection { expected: Direction, actual: Direction },
    #[error("column map is {actual:?} columns, design space has {expected:?}")]
    DimensionMismatch { expected: [usize; 2], actual: [usize; 2] },
    #[error("label array has {actual} entries, expected {expected}")]
    WrongLength { expected: usize, actual: usize },
    #[error("column ({j}, {k}): {reason}")]
    InvalidColumn { j: usize, k: usize, reason: &'static str },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub occupied: usize,
    pub foam: usize,
    pub foam_plus: usize,
    pub foam_minus: usize,
}

impl LabelCounts {
    /// All foam blocks, split or not: the block map proper.
    pub fn total_foam(&self) -> usize {
        self.foam + self.foam_plus + self.foam_minus
    }

    fn add(&mut self, label: Label) {
        match label {
            Label::Occupied => self.occupied += 1,
            Label::Foam => self.foam += 1,
            Label::FoamPlus => self.foam_plus += 1,
            Label::FoamMinus => self.foam_minus += 1,
        }
    }
}

/// Labels over the `nx × ny × nz` block grid.
///
/// Storage is column-contiguous: block `(i, j, k)` lives at
/// `(j * nz + k) * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMap {
    space: DesignSpace,
    labels: Vec<Label>,
    /// Occupied x interval `[lo, hi]` per column, `j * nz + k`.
    spans: Vec<Option<(u32, u32)>>,
    one_sided_columns: usize,
}

impl BlockMap {
    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (j * self.space.nz() + k) * self.space.nx() + i
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Label {
        self.labels[self.index(i, j, k)]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Labels of column `(j, k)` from i = 0 to nx − 1.
    pub fn column(&self, j: usize, k: usize) -> &[Label] {
        let start = self.index(0, j, k);
        &self.labels[start..start + self.space.nx()]
    }

    /// Occupied interval of column `(j, k)`, if any.
    pub fn occupied_span(&self, j: usize, k: usize) -> Option<(u32, u32)> {
        self.spans[j * self.space.nz() + k]
    }

    /// Columns where only one camera saw the surface; they are left as foam.
    pub fn one_sided_columns(&self) -> usize {
        self.one_sided_columns
    }

    pub fn counts(&self) -> LabelCounts {
        let mut c = LabelCounts::default();
        for &l in &self.labels {
            c.add(l);
        }
        c
    }

    pub(crate) fn validate_split(&self) -> Result<(), BlockMapError> {
        if self.labels.iter().any(|l| matches!(l, Label::FoamPlus | Label::FoamMinus)) {
            self.check_height_field()?;
        }
        Ok(())
    }

    pub fn is_split(&self) -> bool {
        !self.labels.contains(&Label::Foam)
    }

    /// Reassembles a map from raw labels, checking that every column's
    /// occupied blocks are contiguous. Foam labels are taken as given; see
    /// [`BlockMap::check_height_field`].
    pub fn from_labels(space: DesignSpace, labels: Vec<Label>, one_sided_columns: usize) -> Result<Self, BlockMapError> {
        if labels.len() != space.block_count() {
            return Err(BlockMapError::WrongLength {
                expected: space.block_count(),
                actual: labels.len(),
            });
        }
        let nx = space.nx();
        let mut spans = Vec::with_capacity(space.column_count());
        for (c, column) in labels.chunks_exact(nx).enumerate() {
            let (j, k) = (c / space.nz(), c % space.nz());
            let first = column.iter().position(|&l| l == Label::Occupied);
            let last = column.iter().rposition(|&l| l == Label::Occupied);
            let span = first.zip(last).map(|(a, b)| (a as u32, b as u32));
            if let Some((a, b)) = span {
                if column[a as usize..=b as usize].iter().any(|&l| l != Label::Occupied) {
                    return Err(BlockMapError::InvalidColumn {
                        j,
                        k,
                        reason: "occupied blocks are not contiguous",
                    });
                }
            }
            spans.push(span);
        }
        Ok(Self {
            space,
            labels,
            spans,
            one_sided_columns,
        })
    }

    /// Every column must read `M* O* P*` from i = 0 upward (an unsplit map
    /// fails). That is what lets each foam half slide off along its axis.
    pub fn check_height_field(&self) -> Result<(), BlockMapError> {
        let (ny, nz) = (self.space.ny(), self.space.nz());
        for j in 0..ny {
            for k in 0..nz {
                let mut stage = 0;
                for &l in self.column(j, k) {
                    let s = match l {
                        Label::FoamMinus => 0,
                        Label::Occupied => 1,
                        Label::FoamPlus => 2,
                        Label::Foam => {
                            return Err(BlockMapError::InvalidColumn {
                                j,
                                k,
                                reason: "foam not assigned to a half",
                            })
                        }
                    };
                    if s < stage {
                        return Err(BlockMapError::InvalidColumn {
                            j,
                            k,
                            reason: "column is not minus-prefix, occupied, plus-suffix",
                        });
                    }
                    stage = s;
                }
            }
        }
        Ok(())
    }
}

/// Marks as occupied every block that lies behind both visible surfaces:
/// `i ≤ index_A` (seen from +x) and `i ≥ index_B` (seen from −x). All else
/// is foam. A column seen by only one camera is treated as empty.
pub fn build_block_map(a: &ColumnDepthMap, b: &ColumnDepthMap, space: &DesignSpace) -> Result<BlockMap, BlockMapError> {
    for (map, expected) in [(a, Direction::PlusX), (b, Direction::MinusX)] {
        if map.direction() != expected {
            return Err(BlockMapError::WrongDirection {
                expected,
                actual: map.direction(),
            });
        }
        if map.dims() != [space.ny(), space.nz()] {
            return Err(BlockMapError::DimensionMismatch {
                expected: [space.ny(), space.nz()],
                actual: map.dims(),
            });
        }
    }
    let nx = space.nx();
    let mut labels = vec![Label::Foam; space.block_count()];
    let mut spans = Vec::with_capacity(space.column_count());
    let mut one_sided = 0;
    for (c, (&ia, &ib)) in a.cells().iter().zip(b.cells()).enumerate() {
        let span = match (ia, ib) {
            (Some(hi), Some(lo)) if lo <= hi => Some((lo, hi)),
            (Some(_), None) | (None, Some(_)) => {
                one_sided += 1;
                None
            }
            _ => None,
        };
        if let Some((lo, hi)) = span {
            labels[c * nx + lo as usize..=c * nx + hi as usize].fill(Label::Occupied);
        }
        spans.push(span);
    }
    Ok(BlockMap {
        space: *space,
        labels,
        spans,
        one_sided_columns: one_sided,
    })
}

const WAVE_PLUS: u8 = 1;
const WAVE_MINUS: u8 = 2;

/// Assigns every foam block to the +x or −x half.
///
/// Columns the object passes through are forced: foam above the occupied
/// run goes to +x, below it to −x. Empty columns are decided by growing
/// two breadth-first waves through 6-connected foam, one from the i = nx−1
/// face and one from the i = 0 face, in lockstep. A block first reached by
/// both waves in the same layer goes to +x when `i ≥ nx/2`. Each empty
/// column is then cut at its lowest +x block so it stays a height field.
pub fn split_regions(bm: &BlockMap) -> BlockMap {
    let space = bm.space;
    let (nx, ny, nz) = (space.nx(), space.ny(), space.nz());
    let n = bm.labels.len();
    let is_foam = |idx: usize| bm.labels[idx].is_foam();

    let mut layer = vec![u32::MAX; n];
    let mut waves = vec![0u8; n];
    let mut frontier = Vec::new();
    for j in 0..ny {
        for k in 0..nz {
            let base = bm.index(0, j, k);
            for (i, wave) in [(0, WAVE_MINUS), (nx - 1, WAVE_PLUS)] {
                let idx = base + i;
                if is_foam(idx) {
                    if layer[idx] == u32::MAX {
                        layer[idx] = 0;
                        frontier.push(idx);
                    }
                    waves[idx] |= wave;
                }
            }
        }
    }

    // strides for ±i, ±k, ±j in the column-contiguous layout
    let (si, sk, sj) = (1, nx, nz * nx);
    let mut depth = 0u32;
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &idx in &frontier {
            let i = idx % nx;
            let k = (idx / sk) % nz;
            let j = idx / sj;
            let mut visit = |nb: usize| {
                if !is_foam(nb) {
                    return;
                }
                if layer[nb] == u32::MAX {
                    layer[nb] = depth + 1;
                    waves[nb] = waves[idx];
                    next.push(nb);
                } else if layer[nb] == depth + 1 {
                    waves[nb] |= waves[idx];
                }
            };
            if i > 0 {
                visit(idx - si);
            }
            if i + 1 < nx {
                visit(idx + si);
            }
            if k > 0 {
                visit(idx - sk);
            }
            if k + 1 < nz {
                visit(idx + sk);
            }
            if j > 0 {
                visit(idx - sj);
            }
            if j + 1 < ny {
                visit(idx + sj);
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
        depth += 1;
    }

    let mut labels = bm.labels.clone();
    for (c, span) in bm.spans.iter().enumerate() {
        let column = &mut labels[c * nx..(c + 1) * nx];
        match *span {
            Some((lo, hi)) => {
                column[..lo as usize].fill(Label::FoamMinus);
                column[hi as usize + 1..].fill(Label::FoamPlus);
            }
            None => {
                let grown = |i: usize| {
                    let w = waves[c * nx + i];
                    assert!(w != 0, "foam block ({i}, col {c}) unreachable from either face");
                    w == WAVE_PLUS || (w == WAVE_PLUS | WAVE_MINUS && 2 * i >= nx)
                };
                let cut = (0..nx).find(|&i| grown(i)).unwrap_or(nx);
                column[..cut].fill(Label::FoamMinus);
                column[cut..].fill(Label::FoamPlus);
            }
        }
    }
    BlockMap {
        space,
        labels,
        spans: bm.spans.clone(),
        one_sided_columns: bm.one_sided_columns,
    }
}
