//! Triangle meshes in millimeters and the rigid motions applied to them.

use std::collections::HashMap;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::MeshFormat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("malformed mesh file: {0}")]
    MalformedFile(String),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
}

/// Indexed triangle soup. Coordinates are millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    source_format: Option<MeshFormat>,
    watertight: bool,
}

impl TriangleMesh {
    /// Validates the index and coordinate invariants. Watertightness is
    /// recorded, not enforced.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if let Some(i) = vertices
            .iter()
            .position(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()))
        {
            return Err(MeshError::NonFiniteVertex(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    vertex_count: vertices.len(),
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex(t));
            }
        }
        let watertight = edges_are_paired(&triangles);
        Ok(Self {
            vertices,
            triangles,
            source_format: None,
            watertight,
        })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            source_format: None,
            watertight: false,
        }
    }

    pub fn with_source_format(mut self, format: MeshFormat) -> Self {
        self.source_format = Some(format);
        self
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn source_format(&self) -> Option<MeshFormat> {
        self.source_format
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// True when every undirected edge is used by an even, non-zero number
    /// of triangles. Scanned soups usually fail this; they are still
    /// accepted, but gap metrics are unavailable for them.
    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    /// Corner positions of triangle `t`.
    pub fn triangle(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn iter_triangles(&self) -> impl Iterator<Item = [Point3<f64>; 3]> + '_ {
        (0..self.triangles.len()).map(|t| self.triangle(t))
    }

    /// Volume by the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.iter_triangles()
            .map(|[a, b, c]| a.coords.dot(&b.coords.cross(&c.coords)))
            .sum::<f64>()
            / 6.0
    }

    fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            source_format: self.source_format,
            watertight: self.watertight,
        }
    }
}

fn edges_are_paired(triangles: &[[u32; 3]]) -> bool {
    if triangles.is_empty() {
        return false;
    }
    let mut uses: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3 / 2);
    for tri in triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            *uses.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    uses.values().all(|&n| n % 2 == 0)
}

/// Euler angles in degrees: `psi` about x, `theta` about y, `phi` about z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Default for EulerAngles {
    fn default() -> Self {
        Self::ZERO
    }
}

impl EulerAngles {
    pub const ZERO: Self = Self {
        psi: 0.0,
        theta: 0.0,
        phi: 0.0,
    };

    pub fn new(psi: f64, theta: f64, phi: f64) -> Self {
        Self { psi, theta, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.theta.is_finite() && self.phi.is_finite()
    }

    /// Each angle wrapped into [0, 360).
    pub fn canonical(self) -> Self {
        let wrap = |a: f64| {
            let w = a.rem_euclid(360.0);
            // rem_euclid can round up to exactly 360 for tiny negatives
            if w >= 360.0 {
                0.0
            } else {
                w
            }
        };
        Self::new(wrap(self.psi), wrap(self.theta), wrap(self.phi))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.psi, self.theta, self.phi]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Extrinsic x, then y, then z: `R = Rz(phi) * Ry(theta) * Rx(psi)`.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let (sx, cx) = sin_cos_deg(self.psi);
        let (sy, cy) = sin_cos_deg(self.theta);
        let (sz, cz) = sin_cos_deg(self.phi);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
        let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
        let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
        rz * ry * rx
    }
}

/// Sine and cosine of an angle in degrees, exact at quarter turns so that
/// grid-aligned objects stay grid-aligned.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d.fract() == 0.0 && (d as i64) % 90 == 0 {
        return match (d as i64) / 90 {
            0 | 4 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    d.to_radians().sin_cos()
}

/// Rotates every vertex about the origin; connectivity is untouched.
pub fn rotate_mesh(mesh: &TriangleMesh, angles: EulerAngles) -> TriangleMesh {
    let r = angles.rotation_matrix();
    mesh.map_vertices(|v| Point3::from(r * v.coords))
}

/// Translates the mesh so its bounding-box center is the origin.
pub fn center_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh, MeshError> {
    let (lo, hi) = bounding_box(mesh)?;
    let center: Vector3<f64> = (lo.coords + hi.coords) * 0.5;
    Ok(mesh.map_vertices(|v| v - center))
}

pub fn bounding_box(mesh: &TriangleMesh) -> Result<(Point3<f64>, Point3<f64>), MeshError> {
    let first = *mesh.vertices.first().ok_or(MeshError::EmptyMesh)?;
    Ok(mesh
        .vertices
        .iter()
        .fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
}
