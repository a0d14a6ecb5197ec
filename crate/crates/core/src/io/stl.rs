use std::io::Cursor;

use nalgebra::Point3;

use crate::mesh::{MeshError, TriangleMesh};

/// Leading bytes of the 80-byte header in every STL we write.
pub const STL_HEADER_TAG: &[u8] = b"foamforge";

pub(super) fn read(bytes: &[u8]) -> Result<super::RawMesh, MeshError> {
    let indexed = stl_io::read_stl(&mut Cursor::new(bytes))
        .map_err(|e| MeshError::MalformedFile(format!("stl: {e}")))?;
    let vertices = indexed
        .vertices
        .iter()
        .map(|v| Point3::new(v[0] as f64, v[1] as f64, v[2] as f64))
        .collect();
    let triangles = indexed
        .faces
        .iter()
        .map(|f| f.vertices.map(|i| i as u32))
        .collect();
    Ok((vertices, triangles))
}

/// Binary STL: 80-byte header, little-endian u32 facet count, then 50 bytes
/// per facet (normal, three corners, zero attribute word).
pub fn write_stl_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangle_count());
    let mut header = [0u8; 80];
    header[..STL_HEADER_TAG.len()].copy_from_slice(STL_HEADER_TAG);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for [a, b, c] in mesh.iter_triangles() {
        let n = (b - a).cross(&(c - a));
        let n = n.try_normalize(0.0).unwrap_or_default();
        for p in [n.x, n.y, n.z, a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z] {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}
