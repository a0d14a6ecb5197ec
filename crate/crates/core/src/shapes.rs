//! Procedural closed meshes: boxes, spheres, tori. Used for benchmarks,
//! fixtures and the CLI's `shape` command.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::mesh::TriangleMesh;

fn build(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, triangles).expect("procedural mesh is valid")
}

/// Axis-aligned box with outward winding: 8 vertices, 12 triangles.
pub fn cuboid(min: [f64; 3], max: [f64; 3]) -> TriangleMesh {
    let corner = |c: usize| {
        Point3::new(
            if c & 1 == 0 { min[0] } else { max[0] },
            if c & 2 == 0 { min[1] } else { max[1] },
            if c & 4 == 0 { min[2] } else { max[2] },
        )
    };
    let vertices = (0..8).map(corner).collect();
    // corner index bits: x=1, y=2, z=4
    let quads: [[u32; 4]; 6] = [
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    build(vertices, triangles)
}

/// Torus around the z axis. Has `major_segments * minor_segments` vertices.
pub fn torus(major_radius: f64, minor_radius: f64, major_segments: u32, minor_segments: u32) -> TriangleMesh {
    let (nu, nv) = (major_segments.max(3), minor_segments.max(3));
    let mut vertices = Vec::with_capacity((nu * nv) as usize);
    for i in 0..nu {
        let u = std::f64::consts::TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = std::f64::consts::TAU * j as f64 / nv as f64;
            let ring = major_radius + minor_radius * v.cos();
            vertices.push(Point3::new(ring * u.cos(), ring * u.sin(), minor_radius * v.sin()));
        }
    }
    let id = |i: u32, j: u32| (i % nu) * nv + (j % nv);
    let mut triangles = Vec::with_capacity((2 * nu * nv) as usize);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    build(vertices, triangles)
}

/// Latitude/longitude sphere.
pub fn uv_sphere(center: [f64; 3], radius: f64, segments: u32, rings: u32) -> TriangleMesh {
    let (ns, nr) = (segments.max(3), rings.max(2));
    let c = Vector3::from(center);
    let mut vertices = vec![Point3::from(c + Vector3::new(0.0, 0.0, -radius))];
    for r in 1..nr {
        let polar = std::f64::consts::PI * r as f64 / nr as f64;
        let (sp, cp) = polar.sin_cos();
        for s in 0..ns {
            let az = std::f64::consts::TAU * s as f64 / ns as f64;
            let (sa, ca) = az.sin_cos();
            vertices.push(Point3::from(c + radius * Vector3::new(sp * ca, sp * sa, -cp)));
        }
    }
    let top = vertices.len() as u32;
    vertices.push(Point3::from(c + Vector3::new(0.0, 0.0, radius)));

    let ring = |r: u32, s: u32| 1 + (r - 1) * ns + (s % ns);
    let mut triangles = Vec::new();
    for s in 0..ns {
        triangles.push([0, ring(1, s + 1), ring(1, s)]);
        triangles.push([top, ring(nr - 1, s), ring(nr - 1, s + 1)]);
    }
    for r in 1..nr - 1 {
        for s in 0..ns {
            let (a, b, c2, d) = (ring(r, s), ring(r, s + 1), ring(r + 1, s + 1), ring(r + 1, s));
            triangles.push([a, b, c2]);
            triangles.push([a, c2, d]);
        }
    }
    build(vertices, triangles)
}

/// Subdivided octahedron projected onto a sphere. Unlike an icosphere the
/// tessellation is invariant under quarter turns about every axis.
pub fn octasphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::x(),
        -Vector3::x(),
        Vector3::y(),
        -Vector3::y(),
        Vector3::z(),
        -Vector3::z(),
    ];
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let mut mid = |p: u32, q: u32| {
                *midpoints.entry((p.min(q), p.max(q))).or_insert_with(|| {
                    vertices.push(((vertices[p as usize] + vertices[q as usize]) * 0.5).normalize());
                    vertices.len() as u32 - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        triangles = next;
    }
    build(vertices.into_iter().map(|v| Point3::from(v * radius)).collect(), triangles)
}

/// Square ring in the xy plane: the box `outer` minus the through-hole
/// `hole` along z. A genus-one solid whose hole is hidden from ±x.
pub fn square_ring(outer_min: [f64; 3], outer_max: [f64; 3], hole_min: [f64; 2], hole_max: [f64; 2]) -> TriangleMesh {
    let (z0, z1) = (outer_min[2], outer_max[2]);
    // Corners counter-clockwise seen from +z.
    let outer = [
        [outer_min[0], outer_min[1]],
        [outer_max[0], outer_min[1]],
        [outer_max[0], outer_max[1]],
        [outer_min[0], outer_max[1]],
    ];
    let inner = [
        [hole_min[0], hole_min[1]],
        [hole_max[0], hole_min[1]],
        [hole_max[0], hole_max[1]],
        [hole_min[0], hole_max[1]],
    ];
    let mut vertices = Vec::with_capacity(16);
    for z in [z0, z1] {
        for p in outer.iter().chain(inner.iter()) {
            vertices.push(Point3::new(p[0], p[1], z));
        }
    }
    // layer offsets: bottom 0, top 8; outer 0..4, inner 4..8
    let (bo, bi, to, ti) = (0u32, 4u32, 8u32, 12u32);
    let mut triangles = Vec::with_capacity(32);
    for e in 0..4u32 {
        let f = (e + 1) % 4;
        // top annulus, facing +z
        triangles.push([to + e, to + f, ti + f]);
        triangles.push([to + e, ti + f, ti + e]);
        // bottom annulus, facing -z
        triangles.push([bo + e, bi + f, bo + f]);
        triangles.push([bo + e, bi + e, bi + f]);
        // outer wall, facing away from the ring center
        triangles.push([bo + e, bo + f, to + f]);
        triangles.push([bo + e, to + f, to + e]);
        // hole wall, facing into the hole
        triangles.push([bi + e, ti + f, bi + f]);
        triangles.push([bi + e, ti + e, ti + f]);
    }
    build(vertices, triangles)
}

pub fn tetrahedron(corners: [[f64; 3]; 4]) -> TriangleMesh {
    let v: Vec<Point3<f64>> = corners.iter().map(|c| Point3::from(*c)).collect();
    let mut triangles = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
    let probe = build(v.clone(), triangles.clone());
    if probe.signed_volume() < 0.0 {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }
    build(v, triangles)
}

/// Concatenates meshes. Only a valid solid when the parts are disjoint.
pub fn merge(parts: &[TriangleMesh]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for part in parts {
        let base = vertices.len() as u32;
        vertices.extend_from_slice(part.vertices());
        triangles.extend(part.triangles().iter().map(|t| t.map(|i| i + base)));
    }
    if triangles.is_empty() {
        return TriangleMesh::empty();
    }
    build(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cuboid_volume_and_closure() {
        let m = cuboid([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]);
        assert_eq!((m.vertex_count(), m.triangle_count()), (8, 12));
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn torus_counts_and_volume() {
        let m = torus(30.0, 10.0, 120, 60);
        assert_eq!(m.vertex_count(), 7200);
        assert!(m.is_watertight());
        let exact = 2.0 * PI * PI * 30.0 * 100.0;
        assert!((m.signed_volume() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn spheres_are_closed_and_outward() {
        for m in [uv_sphere([1.0, 2.0, 3.0], 5.0, 24, 12), octasphere(5.0, 3)] {
            assert!(m.is_watertight());
            let exact = 4.0 / 3.0 * PI * 125.0;
            assert!((m.signed_volume() - exact).abs() / exact < 0.05, "{}", m.signed_volume());
        }
    }

    #[test]
    fn square_ring_volume() {
        let m = square_ring([-10.0, -10.0, -2.0], [10.0, 10.0, 2.0], [-4.0, -4.0], [4.0, 4.0]);
        assert!(m.is_watertight());
        assert!((m.signed_volume() - (400.0 - 64.0) * 4.0).abs() < 1e-9);
    }

    #[test]
    fn tetrahedron_is_outward() {
        let m = tetrahedron([[0.0; 3], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((m.signed_volume() - 1.0 / 6.0).abs() < 1e-12);
    }
}
