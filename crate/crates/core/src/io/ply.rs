use std::fmt::Write as _;

use nalgebra::Point3;

use crate::mesh::{MeshError, TriangleMesh};

#[derive(Debug)]
enum Property {
    Scalar(String),
    List(String),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

fn malformed(msg: impl Into<String>) -> MeshError {
    MeshError::MalformedFile(format!("ply: {}", msg.into()))
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Vec<Element>, MeshError> {
    if lines.next().map(str::trim) != Some("ply") {
        return Err(malformed("missing 'ply' magic"));
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    loop {
        let line = lines.next().ok_or_else(|| malformed("header not terminated"))?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("end_header") => break,
            Some("format") => {
                match words.next() {
                    Some("ascii") => {}
                    Some(other) => {
                        return Err(MeshError::UnsupportedFeature(format!("ply format {other}")))
                    }
                    None => return Err(malformed("empty format line")),
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = words.next().ok_or_else(|| malformed("unnamed element"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| malformed(format!("bad count for element {name}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before any element"))?;
                let words: Vec<&str> = words.collect();
                let prop = match words.as_slice() {
                    ["list", _, _, name] => Property::List(name.to_string()),
                    [_, name] => Property::Scalar(name.to_string()),
                    _ => return Err(malformed(format!("bad property line '{line}'"))),
                };
                element.properties.push(prop);
            }
            Some(other) => return Err(malformed(format!("unknown header keyword '{other}'"))),
        }
    }
    if !saw_format {
        return Err(malformed("missing format line"));
    }
    Ok(elements)
}

pub(super) fn read(bytes: &[u8]) -> Result<super::RawMesh, MeshError> {
    // Binary bodies are not valid UTF-8 in general; only the header must be.
    let header_end = find_subslice(bytes, b"end_header").ok_or_else(|| malformed("no end_header"))?;
    let header = std::str::from_utf8(&bytes[..header_end + b"end_header".len()])
        .map_err(|_| malformed("header is not text"))?;
    let elements = parse_header(&mut header.lines())?;
    let body = std::str::from_utf8(&bytes[header.len()..]).map_err(|_| malformed("body is not text"))?;
    let mut lines = body.lines().map(str::trim).filter(|l| !l.is_empty());

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for element in &elements {
        match element.name.as_str() {
            "vertex" => {
                let axis = |n: &str| {
                    element
                        .properties
                        .iter()
                        .position(|p| matches!(p, Property::Scalar(s) if s == n))
                        .ok_or_else(|| malformed(format!("vertex element lacks '{n}'")))
                };
                let (ix, iy, iz) = (axis("x")?, axis("y")?, axis("z")?);
                if element.properties.iter().any(|p| matches!(p, Property::List(_))) {
                    return Err(MeshError::UnsupportedFeature("list property on vertices".into()));
                }
                vertices.reserve(element.count);
                for n in 0..element.count {
                    let line = lines.next().ok_or_else(|| malformed(format!("truncated at vertex {n}")))?;
                    let values: Vec<f64> = line
                        .split_whitespace()
                        .map(|w| w.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| malformed(format!("bad number in vertex {n}")))?;
                    if values.len() != element.properties.len() {
                        return Err(malformed(format!("vertex {n} has {} values", values.len())));
                    }
                    vertices.push(Point3::new(values[ix], values[iy], values[iz]));
                }
            }
            "face" => {
                for n in 0..element.count {
                    let line = lines.next().ok_or_else(|| malformed(format!("truncated at face {n}")))?;
                    let mut words = line.split_whitespace();
                    let mut polygon = None;
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar(_) => {
                                words.next().ok_or_else(|| malformed(format!("short face {n}")))?;
                            }
                            Property::List(name) => {
                                let len: usize = words
                                    .next()
                                    .and_then(|w| w.parse().ok())
                                    .ok_or_else(|| malformed(format!("bad list length in face {n}")))?;
                                let items: Vec<u32> = words
                                    .by_ref()
                                    .take(len)
                                    .map(|w| w.parse::<u32>())
                                    .collect::<Result<_, _>>()
                                    .map_err(|_| malformed(format!("bad index in face {n}")))?;
                                if items.len() != len {
                                    return Err(malformed(format!("short face {n}")));
                                }
                                if name == "vertex_indices" || name == "vertex_index" {
                                    polygon = Some(items);
                                }
                            }
                        }
                    }
                    let polygon = polygon.ok_or_else(|| malformed("face element lacks vertex_indices"))?;
                    if polygon.len() < 3 {
                        return Err(malformed(format!("face {n} has {} corners", polygon.len())));
                    }
                    for w in 1..polygon.len() - 1 {
                        triangles.push([polygon[0], polygon[w], polygon[w + 1]]);
                    }
                }
            }
            other => {
                return Err(MeshError::UnsupportedFeature(format!("ply element '{other}'")));
            }
        }
    }
    Ok((vertices, triangles))
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// ASCII PLY with float coordinates and one `vertex_indices` list per face.
pub fn write_ply_ascii(mesh: &TriangleMesh) -> Vec<u8> {
    let mut s = String::with_capacity(64 * (mesh.vertex_count() + mesh.triangle_count()) + 256);
    s.push_str("ply\nformat ascii 1.0\ncomment foamforge\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertex_count());
    s.push_str("property float x\nproperty float y\nproperty float z\n");
    let _ = writeln!(s, "element face {}", mesh.triangle_count());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x as f32, v.y as f32, v.z as f32);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_mesh, MeshFormat};

    const SQUARE: &str = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\n\
        property float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\n\
        property uchar flags\nend_header\n0 0 0 1\n1 0 0 2\n1 1 0 3\n0 1 0 4\n4 0 1 2 3 7\n";

    #[test]
    fn quad_is_fanned_and_extra_properties_skipped() {
        let m = load_mesh(SQUARE.as_bytes(), MeshFormat::Ply).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn binary_is_unsupported() {
        let src = SQUARE.replace("format ascii 1.0", "format binary_little_endian 1.0");
        assert!(matches!(load_mesh(src.as_bytes(), MeshFormat::Ply), Err(MeshError::UnsupportedFeature(_))));
    }

    #[test]
    fn edge_elements_are_unsupported() {
        let src = SQUARE.replace("end_header", "element edge 1\nproperty int vertex1\nproperty int vertex2\nend_header")
            + "0 1\n";
        assert!(matches!(load_mesh(src.as_bytes(), MeshFormat::Ply), Err(MeshError::UnsupportedFeature(_))));
    }

    #[test]
    fn truncated_body() {
        let src = &SQUARE[..SQUARE.len() - 14];
        assert!(matches!(load_mesh(src.as_bytes(), MeshFormat::Ply), Err(MeshError::MalformedFile(_))));
    }

    #[test]
    fn header_counts() {
        let m = crate::shapes::cuboid([0.0; 3], [1.0; 3]);
        let text = String::from_utf8(write_ply_ascii(&m)).unwrap();
        assert!(text.contains("element vertex 8\n"));
        assert!(text.contains("element face 12\n"));
    }
}
