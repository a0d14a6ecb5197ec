//! The rasterizer against per-texel ray casting and analytic depths.

use foamforge_core::depth::{column_maps, render_depth_pair};
use foamforge_core::{rotate_mesh, shapes, DesignSpace, EulerAngles, Parallelism, TriangleMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nearest and farthest x where the line through `(y, z)` along x meets
/// the mesh, and whether some triangle was grazed too closely to call.
fn cast(mesh: &TriangleMesh, y: f64, z: f64) -> (Option<(f64, f64)>, bool) {
    let mut hits: Option<(f64, f64)> = None;
    let mut grazed = false;
    for [a, b, c] in mesh.iter_triangles() {
        // Möller–Trumbore with origin (0, y, z) and direction +x; t is x
        let (e1, e2) = (b - a, c - a);
        let dir = nalgebra::Vector3::x();
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-12 {
            continue;
        }
        let s = nalgebra::Vector3::new(-a.x, y - a.y, z - a.z);
        let u = s.dot(&p) / det;
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        let margin = u.min(v).min(1.0 - u - v);
        if margin.abs() < 1e-9 {
            grazed = true;
        }
        if margin < 0.0 {
            continue;
        }
        let t = e2.dot(&q) / det;
        hits = Some(hits.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t))));
    }
    (hits, grazed)
}

fn texel_center(space: &DesignSpace, s: u32, u: usize, v: usize) -> (f64, f64) {
    let [_, ey, ez] = space.extents();
    let [_, by, bz] = space.block_size();
    (-0.5 * ey + (u as f64 + 0.5) * by / s as f64, -0.5 * ez + (v as f64 + 0.5) * bz / s as f64)
}

fn random_blob(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let parts: Vec<TriangleMesh> = (0..rng.random_range(1..4))
        .map(|_| {
            let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-12.0..12.0));
            match rng.random_range(0..3) {
                0 => shapes::uv_sphere(c, rng.random_range(3.0..10.0), 17, 9),
                1 => {
                    let h: [f64; 3] = std::array::from_fn(|_| rng.random_range(1.0..9.0));
                    shapes::cuboid(std::array::from_fn(|i| c[i] - h[i]), std::array::from_fn(|i| c[i] + h[i]))
                }
                _ => shapes::torus(rng.random_range(6.0..10.0), rng.random_range(1.5..4.0), 19, 11),
            }
        })
        .collect();
    let angles = EulerAngles::new(rng.random_range(0.0..360.0), rng.random_range(0.0..360.0), rng.random_range(0.0..360.0));
    rotate_mesh(&shapes::merge(&parts), angles)
}

#[test]
fn texels_match_ray_casting() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = DesignSpace::new([10, 7, 6], [5.0, 6.0, 7.0]).unwrap();
    let half_x = 0.5 * space.extents()[0];
    let mut compared = 0;
    for _ in 0..12 {
        let mesh = random_blob(&mut rng);
        let s = rng.random_range(1..6);
        let [plus, minus] = render_depth_pair(&mesh, &space, s, Parallelism::Sequential).unwrap();
        for v in 0..plus.height() {
            for u in 0..plus.width() {
                let (y, z) = texel_center(&space, s, u, v);
                let (hits, grazed) = cast(&mesh, y, z);
                if grazed {
                    continue;
                }
                compared += 1;
                let expect = hits.map(|(lo, hi)| (lo.clamp(-half_x, half_x), hi.clamp(-half_x, half_x)));
                match (expect, plus.get(u, v), minus.get(u, v)) {
                    (None, None, None) => {}
                    (Some((lo, hi)), Some(p), Some(m)) => {
                        assert!((p - hi).abs() < 1e-9, "+x texel ({u}, {v}): {p} vs {hi}");
                        assert!((m - lo).abs() < 1e-9, "−x texel ({u}, {v}): {m} vs {lo}");
                    }
                    other => panic!("texel ({u}, {v}) hit status differs: {other:?}"),
                }
            }
        }
    }
    assert!(compared > 5000);
}

#[test]
fn sphere_depth_is_analytic_within_chord_error() {
    let r = 30.0;
    let (seg, rings) = (96, 48);
    let sphere = shapes::uv_sphere([0.0; 3], r, seg, rings);
    let space = DesignSpace::new([8, 8, 8], [10.0; 3]).unwrap();
    let s = 6;
    let [plus, minus] = render_depth_pair(&sphere, &space, s, Parallelism::Parallel).unwrap();
    // a facet lies within r·(1 − cos(half the widest angular step)) of the sphere
    let step = std::f64::consts::PI * 2.0 / seg as f64;
    let sag = r * (1.0 - (step / 2.0).cos()) * 2.0;
    for v in 0..plus.height() {
        for u in 0..plus.width() {
            let (y, z) = texel_center(&space, s, u, v);
            let rho2 = y * y + z * z;
            if rho2 > (r - 2.0) * (r - 2.0) {
                continue;
            }
            let x = (r * r - rho2).sqrt();
            let (p, m) = (plus.get(u, v).unwrap(), minus.get(u, v).unwrap());
            assert!(p <= x + 1e-9 && x - p <= sag * r / x, "+x at ({y}, {z}): {p} vs {x}");
            assert!(m >= -x - 1e-9 && m + x <= sag * r / x, "−x at ({y}, {z}): {m} vs {}", -x);
        }
    }
}

#[test]
fn nested_sampling_only_grows_occupancy() {
    // texel centers at s are a subset of those at 3s
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let space = DesignSpace::new([9, 8, 7], [4.0, 5.0, 6.0]).unwrap();
    for _ in 0..10 {
        let mesh = random_blob(&mut rng);
        let (a1, b1) = column_maps(&mesh, &space, 1, Parallelism::Parallel).unwrap();
        let (a3, b3) = column_maps(&mesh, &space, 3, Parallelism::Parallel).unwrap();
        for (c1, c3) in a1.cells().iter().zip(a3.cells()) {
            if let Some(i1) = c1 {
                assert!(c3.unwrap() >= *i1);
            }
        }
        for (c1, c3) in b1.cells().iter().zip(b3.cells()) {
            if let Some(i1) = c1 {
                assert!(c3.unwrap() <= *i1);
            }
        }
    }
}
