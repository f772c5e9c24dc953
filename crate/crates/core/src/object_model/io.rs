//! OBJ and STL ingestion with unit-cube normalization.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use super::ObjectError;
use crate::geometry::{Similarity, Vec3};

/// Fraction of the unit cube left empty on each side after normalization.
pub const NORMALIZATION_MARGIN: f64 = 0.02;

/// Triangles below this area (after normalization) are dropped.
const DEGENERATE_AREA: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    Obj,
    StlBinary,
    StlAscii,
}

impl MeshFormat {
    /// Guesses the format from a file extension and, for STL, the leading bytes.
    pub fn sniff(extension: &str, bytes: &[u8]) -> Option<Self> {
        match extension.to_ascii_lowercase().as_str() {
            "obj" => Some(Self::Obj),
            "stl" => {
                let binary_len_matches = bytes.len() >= 84 && {
                    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]);
                    bytes.len() as u64 == 84 + 50 * u64::from(n)
                };
                if bytes.starts_with(b"solid") && !binary_len_matches {
                    Some(Self::StlAscii)
                } else {
                    Some(Self::StlBinary)
                }
            }
            _ => None,
        }
    }
}

/// Where in the input a parse error occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceLocation {
    Line(usize),
    Offset(usize),
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceLocation::Line(l) => write!(f, "line {l}"),
            SourceLocation::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    /// Maps source coordinates into the unit cube.
    pub normalization: Similarity,
    /// Zero-area triangles removed during cleanup.
    pub dropped_degenerate: usize,
}

pub fn load_mesh(bytes: &[u8], format: MeshFormat) -> Result<LoadedMesh, ObjectError> {
    let (vertices, triangles) = match format {
        MeshFormat::Obj => parse_obj(bytes)?,
        MeshFormat::StlBinary => parse_stl_binary(bytes)?,
        MeshFormat::StlAscii => parse_stl_ascii(bytes)?,
    };
    normalize(vertices, triangles)
}

/// Fits raw geometry into the unit cube (uniform scale, centred, 2% margin)
/// and drops zero-area triangles.
// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn normalize(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<LoadedMesh, ObjectError> {
    let raw = TriangleMesh::new(vertices, triangles)?;
    let bounds = raw.bounds().ok_or(ObjectError::EmptyMesh)?;
    let ext = bounds.extents();
    let largest = ext.x.max(ext.y).max(ext.z);
    if !(largest > 0.0) {
        return Err(ObjectError::EmptyMesh);
    }
    let scale = (1.0 - 2.0 * NORMALIZATION_MARGIN) / largest;
    let normalization = Similarity::new(scale, Vec3::splat(0.5) - bounds.center() * scale);
    let moved = raw.transformed(&normalization);

    let mut kept = Vec::with_capacity(moved.triangle_count());
    for (t, tri) in moved.triangles().iter().enumerate() {
        let distinct = tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2];
        if distinct && moved.triangle_area(t) > DEGENERATE_AREA {
            kept.push(*tri);
        }
    }
    let dropped_degenerate = moved.triangle_count() - kept.len();
    if kept.is_empty() {
        return Err(ObjectError::EmptyMesh);
    }
    if dropped_degenerate > 0 {
        log::warn!("dropped {dropped_degenerate} degenerate triangle(s)");
    }
    let mesh = TriangleMesh::from_parts_unchecked(moved.vertices().to_vec(), kept);
    Ok(LoadedMesh {
        mesh,
        normalization,
        dropped_degenerate,
    })
}

fn parse_err(location: SourceLocation, message: impl Into<String>) -> ObjectError {
    ObjectError::Parse {
        location,
        message: message.into(),
    }
}

fn parse_floats<'a>(
    tokens: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<Vec3, ObjectError> {
    let mut c = [0.0; 3];
    let mut tokens = tokens;
    for slot in &mut c {
        let tok = tokens
            .next()
            .ok_or_else(|| parse_err(SourceLocation::Line(line), "expected 3 coordinates"))?;
        *slot = tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(SourceLocation::Line(line), format!("bad number {tok:?}")))?;
    }
    Ok(Vec3::from(c))
}

fn parse_obj(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[u32; 3]>), ObjectError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_err(SourceLocation::Offset(e.valid_up_to()), "invalid UTF-8"))?;
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => vertices.push(parse_floats(tokens, line)?),
            Some("f") => {
                let refs = tokens
                    .map(|tok| {
                        tok.split('/')
                            .next()
                            .and_then(|s| s.parse::<i64>().ok())
                            .filter(|&v| v != 0)
                            .ok_or_else(|| {
                                parse_err(SourceLocation::Line(line), format!("bad face index {tok:?}"))
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if refs.len() < 3 {
                    return Err(parse_err(SourceLocation::Line(line), "face needs 3 vertices"));
                }
                // negative indices are relative to the vertices seen so far
                let resolved = refs
                    .into_iter()
                    .map(|r| if r < 0 { vertices.len() as i64 + r + 1 } else { r })
                    .collect();
                faces.push((line, resolved));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, refs) in faces {
        if let Some(bad) = refs.iter().find(|&&r| r < 1 || r > n) {
            return Err(parse_err(
                SourceLocation::Line(line),
                format!("vertex index {bad} out of range 1..={n}"),
            ));
        }
        let idx: Vec<u32> = refs.iter().map(|&r| (r - 1) as u32).collect();
        for k in 1..idx.len() - 1 {
            triangles.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    if triangles.is_empty() {
        return Err(ObjectError::EmptyMesh);
    }
    Ok((vertices, triangles))
}

/// Welds bit-identical positions into shared vertices.
#[derive(Default)]
struct Welder {
    index: HashMap<[u64; 3], u32>,
    vertices: Vec<Vec3>,
}

impl Welder {
    fn add(&mut self, v: Vec3) -> u32 {
        // fold -0.0 into 0.0 so mirrored zeros weld together
        let key = v.to_array().map(|c| (c + 0.0).to_bits());
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(v);
            (self.vertices.len() - 1) as u32
        })
    }
}

fn parse_stl_binary(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[u32; 3]>), ObjectError> {
    if bytes.len() < 84 {
        return Err(parse_err(
            SourceLocation::Offset(bytes.len()),
            "binary STL shorter than its 84-byte header",
        ));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let needed = 84 + 50 * count;
    if bytes.len() < needed {
        let complete = (bytes.len() - 84) / 50;
        return Err(parse_err(
            SourceLocation::Offset(84 + 50 * complete),
            format!("header declares {count} facets but only {complete} are present"),
        ));
    }
    let mut welder = Welder::default();
    let mut triangles = Vec::with_capacity(count);
    for f in 0..count {
        let base = 84 + 50 * f + 12; // skip the facet normal
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let off = base + 12 * k;
            let read = |o: usize| {
                f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64
            };
            let v = Vec3::new(read(off), read(off + 4), read(off + 8));
            if !v.is_finite() {
                return Err(parse_err(SourceLocation::Offset(off), "non-finite vertex"));
            }
            *slot = welder.add(v);
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(ObjectError::EmptyMesh);
    }
    Ok((welder.vertices, triangles))
}

fn parse_stl_ascii(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[u32; 3]>), ObjectError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_err(SourceLocation::Offset(e.valid_up_to()), "invalid UTF-8"))?;
    let mut welder = Welder::default();
    let mut triangles = Vec::new();
    let mut current: Option<Vec<u32>> = None;
    let mut saw_solid = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tokens = raw.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        match keyword {
            "solid" => saw_solid = true,
            "facet" => {
                if current.is_some() {
                    return Err(parse_err(SourceLocation::Line(line), "nested facet"));
                }
                current = Some(Vec::with_capacity(3));
            }
            "vertex" => {
                let facet = current
                    .as_mut()
                    .ok_or_else(|| parse_err(SourceLocation::Line(line), "vertex outside facet"))?;
                facet.push(welder.add(parse_floats(tokens, line)?));
            }
            "endfacet" => {
                let facet = current
                    .take()
                    .ok_or_else(|| parse_err(SourceLocation::Line(line), "endfacet without facet"))?;
                if facet.len() < 3 {
                    return Err(parse_err(SourceLocation::Line(line), "facet with fewer than 3 vertices"));
                }
                for k in 1..facet.len() - 1 {
                    triangles.push([facet[0], facet[k], facet[k + 1]]);
                }
            }
            "outer" | "endloop" | "endsolid" => {}
            other => {
                return Err(parse_err(
                    SourceLocation::Line(line),
                    format!("unexpected keyword {other:?}"),
                ))
            }
        }
    }
    if !saw_solid {
        return Err(parse_err(SourceLocation::Line(1), "missing `solid` header"));
    }
    if current.is_some() {
        return Err(parse_err(SourceLocation::Line(text.lines().count()), "unterminated facet"));
    }
    if triangles.is_empty() {
        return Err(ObjectError::EmptyMesh);
    }
    Ok((welder.vertices, triangles))
}

/// Encodes a mesh as binary STL (used by tests and fixtures).
pub fn to_stl_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(t);
        let n = (b - a).cross(c - a).normalized().unwrap_or(Vec3::ZERO);
        for v in [n, a, b, c] {
            for comp in v.to_array() {
                out.extend_from_slice(&(comp as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::object_model::mesh::MeshBuilder;

    fn unit_cube() -> TriangleMesh {
        let mut b = MeshBuilder::default();
        b.push_box(&Aabb::UNIT);
        b.finish()
    }

    #[test]
    fn minimal_obj() {
        let src = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let m = load_mesh(src, MeshFormat::Obj).unwrap();
        assert_eq!(m.mesh.vertices().len(), 3);
        assert_eq!(m.mesh.triangle_count(), 1);
        assert_eq!(m.dropped_degenerate, 0);
        let b = m.mesh.bounds().unwrap();
        assert!((b.extents().x - 0.96).abs() < 1e-12);
        assert!((b.center().x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn obj_zero_area_face_is_dropped() {
        let src = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n";
        let m = load_mesh(src, MeshFormat::Obj).unwrap();
        assert_eq!(m.mesh.triangle_count(), 1);
        assert_eq!(m.dropped_degenerate, 1);
    }

    #[test]
    fn obj_polygons_slashes_and_negative_indices() {
        let src = b"# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2/1 -2 -1\n";
        let m = load_mesh(src, MeshFormat::Obj).unwrap();
        assert_eq!(m.mesh.triangle_count(), 2);
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let err = load_mesh(b"v 0 0 0\nv 1 x 0\n", MeshFormat::Obj).unwrap_err();
        assert!(matches!(err, ObjectError::Parse { location: SourceLocation::Line(2), .. }));
        let err = load_mesh(b"v 0 0 0\nf 1 2 3\n", MeshFormat::Obj).unwrap_err();
        assert!(matches!(err, ObjectError::Parse { location: SourceLocation::Line(2), .. }));
        assert!(matches!(load_mesh(b"v 0 0 0\n", MeshFormat::Obj), Err(ObjectError::EmptyMesh)));
    }

    #[test]
    fn binary_stl_cube() {
        let bytes = to_stl_binary(&unit_cube());
        assert_eq!(bytes.len(), 84 + 12 * 50);
        let m = load_mesh(&bytes, MeshFormat::StlBinary).unwrap();
        assert_eq!(m.mesh.triangle_count(), 12);
        assert_eq!(m.mesh.vertices().len(), 8);
        let b = m.mesh.bounds().unwrap();
        assert!(b.min.max_abs_diff(Vec3::splat(0.02)) < 1e-12);
        assert!(b.max.max_abs_diff(Vec3::splat(0.98)) < 1e-12);
        assert_eq!(MeshFormat::sniff("STL", &bytes), Some(MeshFormat::StlBinary));
    }

    #[test]
    fn truncated_binary_stl_reports_offset() {
        let bytes = to_stl_binary(&unit_cube());
        let err = load_mesh(&bytes[..84 + 50 * 3 + 7], MeshFormat::StlBinary).unwrap_err();
        assert!(matches!(
            err,
            ObjectError::Parse { location: SourceLocation::Offset(234), .. }
        ));
    }

    #[test]
    fn ascii_stl() {
        let src = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";
        let m = load_mesh(src.as_bytes(), MeshFormat::StlAscii).unwrap();
        assert_eq!(m.mesh.triangle_count(), 1);
        assert_eq!(MeshFormat::sniff("stl", src.as_bytes()), Some(MeshFormat::StlAscii));
        let err = load_mesh(b"solid t\n vertex 0 0 0\n", MeshFormat::StlAscii).unwrap_err();
        assert!(matches!(err, ObjectError::Parse { location: SourceLocation::Line(2), .. }));
    }

    #[test]
    fn obj_export_round_trip() {
        let m = load_mesh(&to_stl_binary(&unit_cube()), MeshFormat::StlBinary).unwrap().mesh;
        let back = load_mesh(m.to_obj().as_bytes(), MeshFormat::Obj).unwrap().mesh;
        assert_eq!(back.triangle_count(), m.triangle_count());
        assert!((back.area() - m.area()).abs() <= 1e-9 * m.area());
    }
}
