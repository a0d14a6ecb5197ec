//! Binary and JSON encodings of a [`BlockMap`].
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic "FFBM" | version u16 | reserved u16 | nx ny nz u32 | bx by bz f64
//! | one-sided column count u32 | one label byte per block
//! ```
//!
//! Label bytes are ordered x-fastest within a column, columns `j * nz + k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BlockMap, BlockMapError, Label};
use crate::space::DesignSpace;

pub const BLOB_MAGIC: &[u8; 4] = b"FFBM";
pub const BLOB_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 12 + 24 + 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("not a block map blob")]
    BadMagic,
    #[error("unsupported block map version {0}")]
    UnsupportedVersion(u16),
    #[error("blob truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("invalid label byte {0}")]
    BadLabel(u8),
    #[error("column {column} run lengths sum to {sum}, expected {expected}")]
    BadRuns { column: usize, sum: usize, expected: usize },
    #[error("expected {expected} columns, got {actual}")]
    ColumnCount { expected: usize, actual: usize },
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
    #[error(transparent)]
    Map(#[from] BlockMapError),
}

impl BlockMap {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.labels.len());
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        for n in self.space.resolution() {
            out.extend_from_slice(&n.to_le_bytes());
        }
        for b in self.space.block_size() {
            out.extend_from_slice(&b.to_le_bytes());
        }
        out.extend_from_slice(&(self.one_sided_columns as u32).to_le_bytes());
        out.extend(self.labels.iter().map(|&l| l as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::Truncated {
                needed: HEADER_LEN,
                have: bytes.len(),
            });
        }
        if &bytes[..4] != BLOB_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != BLOB_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let resolution = [u32_at(8), u32_at(12), u32_at(16)];
        let block_size = [f64_at(20), f64_at(28), f64_at(36)];
        let one_sided = u32_at(44) as usize;
        let space = DesignSpace::new(resolution, block_size)?;
        let needed = HEADER_LEN + space.block_count();
        if bytes.len() < needed {
            return Err(CodecError::Truncated {
                needed,
                have: bytes.len(),
            });
        }
        let labels = bytes[HEADER_LEN..needed]
            .iter()
            .map(|&b| Label::from_byte(b).ok_or(CodecError::BadLabel(b)))
            .collect::<Result<Vec<_>, _>>()?;
        let map = BlockMap::from_labels(space, labels, one_sided)?;
        map.validate_split()?;
        Ok(map)
    }

    pub fn to_json(&self) -> BlockMapJson {
        let nx = self.space.nx();
        let columns = self
            .labels
            .chunks_exact(nx)
            .map(|column| {
                let mut runs: Vec<(Label, u32)> = Vec::new();
                for &l in column {
                    match runs.last_mut() {
                        Some((last, n)) if *last == l => *n += 1,
                        _ => runs.push((l, 1)),
                    }
                }
                runs
            })
            .collect();
        BlockMapJson {
            version: BLOB_VERSION,
            space: self.space,
            one_sided_columns: self.one_sided_columns,
            columns,
        }
    }

    pub fn from_json(json: &BlockMapJson) -> Result<Self, CodecError> {
        if json.version != BLOB_VERSION {
            return Err(CodecError::UnsupportedVersion(json.version));
        }
        let space = json.space;
        if json.columns.len() != space.column_count() {
            return Err(CodecError::ColumnCount {
                expected: space.column_count(),
                actual: json.columns.len(),
            });
        }
        let mut labels = Vec::with_capacity(space.block_count());
        for (c, runs) in json.columns.iter().enumerate() {
            let sum: usize = runs.iter().map(|&(_, n)| n as usize).sum();
            if sum != space.nx() {
                return Err(CodecError::BadRuns {
                    column: c,
                    sum,
                    expected: space.nx(),
                });
            }
            for &(l, n) in runs {
                labels.extend(std::iter::repeat_n(l, n as usize));
            }
        }
        let map = BlockMap::from_labels(space, labels, json.one_sided_columns)?;
        map.validate_split()?;
        Ok(map)
    }
}

/// Run-length encoded labels per column, `j * nz + k` order, each column
/// read from i = 0 upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMapJson {
    pub version: u16,
    #[serde(flatten)]
    pub space: DesignSpace,
    pub one_sided_columns: usize,
    pub columns: Vec<Vec<(Label, u32)>>,
}
