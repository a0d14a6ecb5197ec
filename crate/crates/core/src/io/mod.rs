//! Reading and writing mesh files.
//!
//! Reads binary and ASCII STL, ASCII PLY and OBJ. Writes binary STL and
//! ASCII PLY.

mod obj;
mod ply;
mod stl;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mesh::{MeshError, TriangleMesh};

/// Raw vertex and triangle arrays as a reader produces them.
type RawMesh = (Vec<nalgebra::Point3<f64>>, Vec<[u32; 3]>);

pub use ply::write_ply_ascii;
pub use stl::{write_stl_binary, STL_HEADER_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Stl,
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "stl" => Some(Self::Stl),
            "ply" => Some(Self::Ply),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Option<Self> {
        path.as_ref()
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Self::from_extension)
    }

    pub fn extension(&self) -> &'static str {
        match self {
            Self::Stl => "stl",
            Self::Ply => "ply",
            Self::Obj => "obj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[serde(rename = "stl")]
    StlBinary,
    #[serde(rename = "ply")]
    PlyAscii,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::StlBinary => "stl",
            Self::PlyAscii => "ply",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "stl" => Some(Self::StlBinary),
            "ply" => Some(Self::PlyAscii),
            _ => None,
        }
    }

    pub fn content_type(&self) -> &'static str {
        match self {
            Self::StlBinary => "model/stl",
            Self::PlyAscii => "text/plain; charset=utf-8",
        }
    }
}

/// Parses `bytes` as `format`. STL vertices are welded on exact coordinate
/// equality; triangles that collapse onto a repeated vertex are dropped.
pub fn load_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    if bytes.is_empty() {
        return Err(MeshError::MalformedFile("empty file".into()));
    }
    let (vertices, triangles) = match format {
        MeshFormat::Stl => stl::read(bytes)?,
        MeshFormat::Ply => ply::read(bytes)?,
        MeshFormat::Obj => obj::read(bytes)?,
    };
    let triangles: Vec<[u32; 3]> = triangles
        .into_iter()
        .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
        .collect();
    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Ok(TriangleMesh::new(vertices, triangles)?.with_source_format(format))
}

pub fn write_mesh(mesh: &TriangleMesh, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::StlBinary => write_stl_binary(mesh),
        OutputFormat::PlyAscii => write_ply_ascii(mesh),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    const CUBE_ASCII_STL: &str = include_str!("../../tests/data/cube_ascii.stl");

    #[test]
    fn ascii_stl_cube() {
        let m = load_mesh(CUBE_ASCII_STL.as_bytes(), MeshFormat::Stl).unwrap();
        assert_eq!(m.triangle_count(), 12);
        assert_eq!(m.vertex_count(), 8);
        assert!(m.is_watertight());
        assert_eq!(m.source_format(), Some(MeshFormat::Stl));
    }

    #[test]
    fn empty_bytes_are_malformed() {
        for f in [MeshFormat::Stl, MeshFormat::Ply, MeshFormat::Obj] {
            assert!(matches!(load_mesh(&[], f), Err(MeshError::MalformedFile(_))));
        }
    }

    #[test]
    fn truncated_binary_stl() {
        let bytes = write_stl_binary(&shapes::cuboid([0.0; 3], [1.0; 3]));
        assert!(matches!(load_mesh(&bytes[..200], MeshFormat::Stl), Err(MeshError::MalformedFile(_))));
        assert!(matches!(load_mesh(&bytes[..40], MeshFormat::Stl), Err(MeshError::MalformedFile(_))));
    }

    #[test]
    fn zero_triangle_stl_is_empty() {
        let bytes = write_stl_binary(&TriangleMesh::empty());
        assert_eq!(bytes.len(), 84);
        assert_eq!(load_mesh(&bytes, MeshFormat::Stl), Err(MeshError::EmptyMesh));
    }

    #[test]
    fn stl_round_trip() {
        let m = shapes::torus(20.0, 5.0, 24, 12);
        let back = load_mesh(&write_stl_binary(&m), MeshFormat::Stl).unwrap();
        assert_eq!(back.triangle_count(), m.triangle_count());
        assert_eq!(back.vertex_count(), m.vertex_count());
        for t in 0..m.triangle_count() {
            for (p, q) in m.triangle(t).iter().zip(back.triangle(t)) {
                assert!((p - q).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn ply_round_trip() {
        let m = shapes::torus(20.0, 5.0, 24, 12);
        let back = load_mesh(&write_ply_ascii(&m), MeshFormat::Ply).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        for (p, q) in m.vertices().iter().zip(back.vertices()) {
            assert!((p - q).norm() < 1e-5);
        }
    }

    #[test]
    fn obj_fan_triangulation() {
        let src = "# quad pyramid\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0.5 0.5 1\n\
                   f 4 3 2 1\nf 1 2 5\nf 2/1 3/1 5/1\nf 3//1 4//1 5//1\nf -5 -1 -2\n";
        let m = load_mesh(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.vertex_count(), 5);
        assert_eq!(m.triangle_count(), 6);
        assert!(m.is_watertight());
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn format_from_path() {
        assert_eq!(MeshFormat::from_path("a/b/Bunny.STL"), Some(MeshFormat::Stl));
        assert_eq!(MeshFormat::from_path("x.obj"), Some(MeshFormat::Obj));
        assert_eq!(MeshFormat::from_path("x.gltf"), None);
    }
}
