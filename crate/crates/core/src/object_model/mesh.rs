use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ObjectError;
use crate::geometry::{Aabb, Similarity, Vec3};

/// Indexed triangle soup in object space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawMesh")]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

#[derive(Deserialize)]
struct RawMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl TryFrom<RawMesh> for TriangleMesh {
    type Error = ObjectError;
    fn try_from(raw: RawMesh) -> Result<Self, ObjectError> {
        TriangleMesh::new(raw.vertices, raw.triangles)
    }
}

impl TriangleMesh {
    /// Validates indices and vertex finiteness.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, ObjectError> {
        if let Some(v) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(ObjectError::InvalidMesh(format!("vertex {v} is not finite")));
        }
        let n = vertices.len();
        if let Some(t) = triangles
            .iter()
            .position(|tri| tri.iter().any(|&i| i as usize >= n))
        {
            return Err(ObjectError::InvalidMesh(format!(
                "triangle {t} references a vertex beyond {n}"
            )));
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        debug_assert!(triangles
            .iter()
            .all(|t| t.iter().all(|&i| (i as usize) < vertices.len())));
        Self {
            vertices,
            triangles,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Bounds of all referenced vertices, `None` for an empty mesh.
    pub fn bounds(&self) -> Option<Aabb> {
        let mut it = self
            .triangles
            .iter()
            .flatten()
            .map(|&i| self.vertices[i as usize]);
        let first = it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Some(Aabb::new(lo, hi))
    }

    /// True when every vertex lies in the unit cube within `1e-6`.
    pub fn is_normalized(&self) -> bool {
        let lo = -1e-6;
        let hi = 1.0 + 1e-6;
        self.vertices
            .iter()
            .all(|v| (0..3).all(|a| v[a] >= lo && v[a] <= hi))
    }

    pub fn transformed(&self, s: &Similarity) -> TriangleMesh {
        Self {
            vertices: self.vertices.iter().map(|&v| s.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Appends `other`, offsetting its indices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }

    /// Debug export as ASCII OBJ with 1-based indices.
    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(32 * (self.vertices.len() + self.triangles.len()));
        out.push_str("# primo mesh\n");
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
        }
        out
    }
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(c - a).length()
}

/// Incremental builder used by generators and clippers.
#[derive(Debug, Default)]
pub(crate) struct MeshBuilder {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl MeshBuilder {
    pub fn with_capacity(vertices: usize, triangles: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(vertices),
            triangles: Vec::with_capacity(triangles),
        }
    }

    pub fn push_vertex(&mut self, v: Vec3) -> u32 {
        self.vertices.push(v);
        (self.vertices.len() - 1) as u32
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn push_box(&mut self, b: &Aabb) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&b.corners());
        // corner index bits: 1 = +x, 2 = +y, 4 = +z
        const FACES: [[u32; 4]; 6] = [
            [0, 4, 6, 2], // -x
            [1, 3, 7, 5], // +x
            [0, 1, 5, 4], // -y
            [2, 6, 7, 3], // +y
            [0, 2, 3, 1], // -z
            [4, 5, 7, 6], // +z
        ];
        for [a, b, c, d] in FACES {
            self.triangles.push([base + a, base + b, base + c]);
            self.triangles.push([base + a, base + c, base + d]);
        }
    }

    pub fn finish(self) -> TriangleMesh {
        TriangleMesh::from_parts_unchecked(self.vertices, self.triangles)
    }
}
