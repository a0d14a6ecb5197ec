//! Rotation search: coordinate sweeps over the three Euler angles that
//! maximize the foam fraction F = foam blocks / all blocks.
//!
//! More foam means the object claims fewer blocks, so the search prefers
//! poses with a thin ±x silhouette.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{EulerAngles, TriangleMesh};
use crate::pipeline::{unsplit_block_map, GenerateParams, Parallelism, PipelineError};
use crate::space::DesignSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("step must be a positive divisor of 360 degrees, got {0}")]
    BadStep(f64),
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Degrees between candidate angles.
    pub step: f64,
    pub max_rounds: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: 5.0,
            max_rounds: 10,
        }
    }
}

impl OptimizerConfig {
    /// Number of candidate angles per axis.
    pub fn candidates(&self) -> Result<usize, OptimizeError> {
        if self.max_rounds == 0 {
            return Err(OptimizeError::ZeroRounds);
        }
        let n = 360.0 / self.step;
        if self.step.is_nan() || self.step <= 0.0 || !n.is_finite() || (n.round() * self.step - 360.0).abs() > 1e-9 || n.round() < 1.0 {
            return Err(OptimizeError::BadStep(self.step));
        }
        Ok(n.round() as usize)
    }

    /// Upper bound on score evaluations, counting the start pose.
    pub fn evaluation_bound(&self) -> Result<usize, OptimizeError> {
        Ok(self.max_rounds as usize * 3 * self.candidates()? + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub angles: EulerAngles,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F_start")]
    pub f_start: f64,
    pub rounds_used: u32,
    pub evaluations: usize,
    /// A full round made no move, so the angles are a per-axis local
    /// optimum at the configured step.
    pub converged: bool,
}

/// Foam fraction of the unsplit block map at `angles`.
pub fn foam_volume_score(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    angles: EulerAngles,
    supersample: u32,
    par: Parallelism,
) -> Result<f64, PipelineError> {
    let bm = unsplit_block_map(mesh, &GenerateParams::new(*space, angles, supersample), par)?;
    Ok(bm.counts().total_foam() as f64 / space.block_count() as f64)
}

/// Greedy coordinate search from `start`.
///
/// Each round sweeps psi, theta, then phi over every multiple of the step
/// with the other two held fixed, and moves only on a strict improvement,
/// to the smallest angle attaining the sweep's maximum. Stops after a
/// round with no move or after `max_rounds`.
pub fn optimize_rotation(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    cfg: &OptimizerConfig,
    start: EulerAngles,
    supersample: u32,
    par: Parallelism,
) -> Result<ScoreReport, OptimizeError> {
    optimize_rotation_with(mesh, space, cfg, start, supersample, par, |_, _| {})
}

/// [`optimize_rotation`], reporting every evaluated pose in order.
pub fn optimize_rotation_with(
    mesh: &TriangleMesh,
    space: &DesignSpace,
    cfg: &OptimizerConfig,
    start: EulerAngles,
    supersample: u32,
    par: Parallelism,
    mut on_eval: impl FnMut(EulerAngles, f64),
) -> Result<ScoreReport, OptimizeError> {
    let n = cfg.candidates()?;
    if !start.is_finite() {
        return Err(PipelineError::NonFiniteAngles.into());
    }
    let score = |a: EulerAngles, p: Parallelism| foam_volume_score(mesh, space, a, supersample, p);

    let mut angles = start;
    let mut f = score(start, par)?;
    on_eval(start, f);
    let f_start = f;
    let mut evaluations = 1;
    let mut rounds_used = 0;
    let mut converged = false;

    while rounds_used < cfg.max_rounds {
        rounds_used += 1;
        let mut moved = false;
        for axis in 0..3 {
            let current = angles.canonical().as_array()[axis];
            let poses: Vec<EulerAngles> = (0..n)
                .map(|k| k as f64 * cfg.step)
                .filter(|&a| a != current)
                .map(|a| {
                    let mut v = angles.as_array();
                    v[axis] = a;
                    EulerAngles::from_array(v)
                })
                .collect();
            let scores: Vec<f64> = match par {
                Parallelism::Sequential => poses.iter().map(|&p| score(p, Parallelism::Sequential)).collect::<Result<_, _>>()?,
                Parallelism::Parallel => poses
                    .par_iter()
                    .map(|&p| score(p, Parallelism::Sequential))
                    .collect::<Result<_, _>>()?,
            };
            evaluations += poses.len();
            let mut best: Option<(EulerAngles, f64)> = None;
            for (&p, &s) in poses.iter().zip(&scores) {
                on_eval(p, s);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((p, s));
                }
            }
            if let Some((p, s)) = best {
                if s > f {
                    angles = p;
                    f = s;
                    moved = true;
                }
            }
        }
        if !moved {
            converged = true;
            break;
        }
    }

    Ok(ScoreReport {
        angles,
        f,
        f_start,
        rounds_used,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn space8() -> DesignSpace {
        DesignSpace::new([8, 8, 8], [10.0; 3]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert_eq!(OptimizerConfig::default().candidates(), Ok(72));
        assert_eq!(OptimizerConfig { step: 7.0, max_rounds: 1 }.candidates(), Err(OptimizeError::BadStep(7.0)));
        assert_eq!(OptimizerConfig { step: 0.0, max_rounds: 1 }.candidates(), Err(OptimizeError::BadStep(0.0)));
        assert_eq!(OptimizerConfig { step: 2.5, max_rounds: 1 }.candidates(), Ok(144));
        assert_eq!(OptimizerConfig { step: 90.0, max_rounds: 0 }.candidates(), Err(OptimizeError::ZeroRounds));
        assert_eq!(OptimizerConfig::default().evaluation_bound(), Ok(10 * 3 * 72 + 1));
    }

    #[test]
    fn trivial_scores() {
        let s = space8();
        assert_eq!(foam_volume_score(&TriangleMesh::empty(), &s, EulerAngles::ZERO, 4, Parallelism::Sequential), Ok(1.0));
        let full = shapes::cuboid([-40.0; 3], [40.0; 3]);
        assert_eq!(foam_volume_score(&full, &s, EulerAngles::ZERO, 4, Parallelism::Sequential), Ok(0.0));
    }

    #[test]
    fn aligned_cube_score() {
        // 4×4 columns, each occupying 6 blocks once the x = ±20 faces
        // claim their neighbors
        let cube = shapes::cuboid([-20.0; 3], [20.0; 3]);
        let f = foam_volume_score(&cube, &space8(), EulerAngles::ZERO, 8, Parallelism::Sequential).unwrap();
        assert_eq!(f, 1.0 - 96.0 / 512.0);
    }

    #[test]
    fn cube_stays_put() {
        let cube = shapes::cuboid([-19.0; 3], [19.0; 3]);
        let s = space8();
        let cfg = OptimizerConfig {
            step: 15.0,
            max_rounds: 3,
        };
        let mut evaluated = Vec::new();
        let r = optimize_rotation_with(&cube, &s, &cfg, EulerAngles::ZERO, 8, Parallelism::Parallel, |a, f| evaluated.push((a, f))).unwrap();
        assert_eq!(r.angles, EulerAngles::ZERO);
        assert!(r.converged);
        assert_eq!(r.rounds_used, 1);
        assert_eq!(r.evaluations, 1 + 3 * 23);
        assert_eq!(evaluated.len(), r.evaluations);
        // quarter turns reproduce the same score exactly
        for (a, f) in &evaluated {
            if a.as_array().iter().all(|x| x % 90.0 == 0.0) {
                assert_eq!(*f, r.f);
            } else {
                assert!(*f <= r.f);
            }
        }
    }

    #[test]
    fn symmetric_sphere_stays_put() {
        let sphere = shapes::octasphere(27.0, 4);
        let cfg = OptimizerConfig {
            step: 30.0,
            max_rounds: 2,
        };
        let start = EulerAngles::ZERO;
        let r = optimize_rotation(&sphere, &space8(), &cfg, start, 8, Parallelism::Parallel).unwrap();
        assert_eq!(r.angles, start);
        assert_eq!(r.f, r.f_start);
    }

    #[test]
    fn rod_reaches_sweep_maximum() {
        let rod = crate::rotate_mesh(&shapes::cuboid([-35.0, -3.0, -3.0], [35.0, 3.0, 3.0]), EulerAngles::new(0.0, -35.26, 45.0));
        let s = space8();
        let cfg = OptimizerConfig {
            step: 15.0,
            max_rounds: 4,
        };
        let mut best = 0.0f64;
        let seq = optimize_rotation_with(&rod, &s, &cfg, EulerAngles::ZERO, 4, Parallelism::Sequential, |_, f| best = best.max(f)).unwrap();
        let par = optimize_rotation(&rod, &s, &cfg, EulerAngles::ZERO, 4, Parallelism::Parallel).unwrap();
        assert_eq!(seq, par);
        assert!(seq.f > seq.f_start);
        assert_eq!(seq.f, best);
        assert!(seq.evaluations <= cfg.evaluation_bound().unwrap());
        assert_eq!(foam_volume_score(&rod, &s, seq.angles, 4, Parallelism::Sequential), Ok(seq.f));
    }

    #[test]
    fn off_lattice_start_evaluates_every_candidate() {
        let cube = shapes::cuboid([-19.0; 3], [19.0; 3]);
        let cfg = OptimizerConfig {
            step: 90.0,
            max_rounds: 1,
        };
        let r = optimize_rotation(&cube, &space8(), &cfg, EulerAngles::new(10.0, 0.0, 0.0), 4, Parallelism::Sequential).unwrap();
        assert_eq!(r.evaluations, 1 + 4 + 3 + 3);
        assert_eq!(r.angles, EulerAngles::ZERO);
    }
}
