use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("block resolution must be positive on every axis, got {0:?}")]
    ZeroResolution([u32; 3]),
    #[error("block size must be positive and finite on every axis, got {0:?}")]
    BadBlockSize([f64; 3]),
}

/// The case interior: an origin-centered box cut into `nx × ny × nz`
/// blocks of `bx × by × bz` millimeters.
///
/// Block `(i, j, k)` spans `x ∈ [-W/2 + i·bx, -W/2 + (i+1)·bx]` with
/// `W = nx·bx`, and likewise along y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct DesignSpace {
    resolution: [u32; 3],
    block_size: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    resolution: [u32; 3],
    block_size_mm: [f64; 3],
}

impl TryFrom<SpaceRepr> for DesignSpace {
    type Error = SpaceError;

    fn try_from(r: SpaceRepr) -> Result<Self, Self::Error> {
        DesignSpace::new(r.resolution, r.block_size_mm)
    }
}

impl From<DesignSpace> for SpaceRepr {
    fn from(s: DesignSpace) -> Self {
        SpaceRepr {
            resolution: s.resolution,
            block_size_mm: s.block_size,
        }
    }
}

impl Default for DesignSpace {
    /// 30×18×18 blocks of 15×15×22 mm, sized after a commercial slit sponge.
    fn default() -> Self {
        Self {
            resolution: Self::DEFAULT_RESOLUTION,
            block_size: Self::DEFAULT_BLOCK_SIZE,
        }
    }
}

impl DesignSpace {
    pub const DEFAULT_RESOLUTION: [u32; 3] = [30, 18, 18];
    pub const DEFAULT_BLOCK_SIZE: [f64; 3] = [15.0, 15.0, 22.0];

    pub fn new(resolution: [u32; 3], block_size: [f64; 3]) -> Result<Self, SpaceError> {
        if resolution.contains(&0) {
            return Err(SpaceError::ZeroResolution(resolution));
        }
        if block_size.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(SpaceError::BadBlockSize(block_size));
        }
        Ok(Self {
            resolution,
            block_size,
        })
    }

    pub fn resolution(&self) -> [u32; 3] {
        self.resolution
    }

    pub fn block_size(&self) -> [f64; 3] {
        self.block_size
    }

    pub fn nx(&self) -> usize {
        self.resolution[0] as usize
    }

    pub fn ny(&self) -> usize {
        self.resolution[1] as usize
    }

    pub fn nz(&self) -> usize {
        self.resolution[2] as usize
    }

    pub fn block_count(&self) -> usize {
        self.nx() * self.ny() * self.nz()
    }

    pub fn column_count(&self) -> usize {
        self.ny() * self.nz()
    }

    pub fn block_volume(&self) -> f64 {
        self.block_size.iter().product()
    }

    /// Full extents `(W, H, D)` in millimeters.
    pub fn extents(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.resolution[a] as f64 * self.block_size[a])
    }

    /// Lower corner coordinate of block index `i` along `axis`.
    pub fn block_min(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.extents()[axis] + i as f64 * self.block_size[axis]
    }

    pub fn block_center(&self, axis: usize, i: usize) -> f64 {
        self.block_min(axis, i) + 0.5 * self.block_size[axis]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = DesignSpace::default();
        assert_eq!(s.resolution(), [30, 18, 18]);
        assert_eq!(s.block_size(), [15.0, 15.0, 22.0]);
        assert_eq!(s.extents(), [450.0, 270.0, 396.0]);
    }

    #[test]
    fn block_lattice() {
        let s = DesignSpace::new([6, 6, 6], [10.0; 3]).unwrap();
        assert_eq!(s.block_min(0, 0), -30.0);
        assert_eq!(s.block_min(0, 4), 10.0);
        assert_eq!(s.block_center(2, 5), 25.0);
    }

    #[test]
    fn rejects_invalid() {
        assert!(matches!(DesignSpace::new([0, 1, 1], [1.0; 3]), Err(SpaceError::ZeroResolution(_))));
        assert!(matches!(DesignSpace::new([1; 3], [0.0, 15.0, 22.0]), Err(SpaceError::BadBlockSize(_))));
        assert!(DesignSpace::new([1; 3], [f64::NAN, 1.0, 1.0]).is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: DesignSpace = serde_json::from_str(r#"{"resolution":[8,8,8],"block_size_mm":[10,10,10]}"#).unwrap();
        assert_eq!(ok.nx(), 8);
        assert!(serde_json::from_str::<DesignSpace>(r#"{"resolution":[8,0,8],"block_size_mm":[10,10,10]}"#).is_err());
    }
}
