//! Procedural lattice objects standing in for scanned parts.

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::mesh::{triangle_area, MeshBuilder, TriangleMesh};
use super::ObjectError;
use crate::geometry::{Aabb, Vec3};

/// Samples per lattice cell along each axis for the gyroid pattern.
const GYROID_SAMPLES_PER_CELL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticePattern {
    GridStruts,
    GyroidApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub cells_per_axis: u32,
    pub strut_thickness: f64,
    pub pattern: LatticePattern,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            cells_per_axis: 4,
            strut_thickness: 0.02,
            pattern: LatticePattern::GridStruts,
        }
    }
}

impl LatticeSpec {
    pub fn grid(cells_per_axis: u32, strut_thickness: f64) -> Self {
        Self {
            cells_per_axis,
            strut_thickness,
            pattern: LatticePattern::GridStruts,
        }
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / f64::from(self.cells_per_axis)
    }

    pub fn validate(&self) -> Result<(), ObjectError> {
        if self.cells_per_axis == 0 {
            return Err(ObjectError::InvalidLattice("cells_per_axis must be at least 1".into()));
        }
        let limit = 0.5 * self.cell_size();
        if !(self.strut_thickness > 0.0 && self.strut_thickness < limit) {
            return Err(ObjectError::InvalidLattice(format!(
                "strut thickness {} outside (0, {limit})",
                self.strut_thickness
            )));
        }
        Ok(())
    }

    /// Number of struts in the grid pattern: one per lattice edge, `3 n (n + 1)^2`.
    pub fn strut_count(&self) -> usize {
        let n = self.cells_per_axis as usize;
        3 * n * (n + 1) * (n + 1)
    }
}

pub fn generate_lattice(spec: &LatticeSpec) -> Result<TriangleMesh, ObjectError> {
    spec.validate()?;
    Ok(match spec.pattern {
        LatticePattern::GridStruts => grid_struts(spec),
        LatticePattern::GyroidApprox => gyroid(spec),
    })
}

/// One axis-aligned box per lattice edge. Lines are inset by half a
/// thickness so boundary struts stay inside the unit cube at full width;
/// end segments are stretched to reach the cube faces.
fn grid_struts(spec: &LatticeSpec) -> TriangleMesh {
    let n = spec.cells_per_axis as usize;
    let t = spec.strut_thickness;
    let pitch = (1.0 - t) / n as f64;
    let line = |j: usize| 0.5 * t + j as f64 * pitch;
    let struts = spec.strut_count();
    let mut b = MeshBuilder::with_capacity(8 * struts, 12 * struts);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for j in 0..=n {
            for k in 0..=n {
                for seg in 0..n {
                    let start = if seg == 0 { 0.0 } else { line(seg) };
                    let end = if seg + 1 == n { 1.0 } else { line(seg + 1) };
                    let lo = Vec3::ZERO
                        .with_axis(axis, start)
                        .with_axis(u, line(j) - 0.5 * t)
                        .with_axis(v, line(k) - 0.5 * t);
                    let hi = Vec3::ZERO
                        .with_axis(axis, end)
                        .with_axis(u, line(j) + 0.5 * t)
                        .with_axis(v, line(k) + 0.5 * t);
                    b.push_box(&Aabb::new(lo, hi));
                }
            }
        }
    }
    b.finish()
}

fn gyroid_field(p: Vec3, frequency: f64, level: f64) -> f64 {
    let (x, y, z) = (p.x * frequency, p.y * frequency, p.z * frequency);
    let g = x.sin() * y.cos() + y.sin() * z.cos() + z.sin() * x.cos();
    g.abs() - level
}

/// Sheet gyroid `|g| < level` extracted with marching tetrahedra.
fn gyroid(spec: &LatticeSpec) -> TriangleMesh {
    let cells = spec.cells_per_axis as usize;
    let res = cells * GYROID_SAMPLES_PER_CELL;
    let step = 1.0 / res as f64;
    let frequency = TAU * cells as f64;
    // |g| spans [0, 1.5]; thickness limit 0.5 cell maps below that
    let level = 3.0 * spec.strut_thickness / spec.cell_size();
    let stride = res + 1;
    let id = |i: usize, j: usize, k: usize| (i + stride * (j + stride * k)) as u32;
    let pos = |n: u32| {
        let n = n as usize;
        Vec3::new(
            (n % stride) as f64 * step,
            ((n / stride) % stride) as f64 * step,
            (n / (stride * stride)) as f64 * step,
        )
    };
    let field: Vec<f64> = (0..stride * stride * stride)
        .map(|n| gyroid_field(pos(n as u32), frequency, level))
        .collect();

    // six tetrahedra around the main cube diagonal (corner 0 to corner 7)
    const TETS: [[usize; 4]; 6] = [
        [0, 1, 3, 7],
        [0, 3, 2, 7],
        [0, 2, 6, 7],
        [0, 6, 4, 7],
        [0, 4, 5, 7],
        [0, 5, 1, 7],
    ];
    let mut b = MeshBuilder::default();
    let mut edge_vertex: HashMap<(u32, u32), u32> = HashMap::new();
    let mut on_edge = |b: &mut MeshBuilder, p: u32, q: u32| -> u32 {
        let key = if p < q { (p, q) } else { (q, p) };
        *edge_vertex.entry(key).or_insert_with(|| {
            let (fp, fq) = (field[key.0 as usize], field[key.1 as usize]);
            let s = fp / (fp - fq);
            let (a, c) = (pos(key.0), pos(key.1));
            b.push_vertex(a + (c - a) * s)
        })
    };
    for k in 0..res {
        for j in 0..res {
            for i in 0..res {
                let corner: [u32; 8] = std::array::from_fn(|c| {
                    id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                });
                for tet in TETS {
                    let verts = tet.map(|c| corner[c]);
                    let inside: Vec<u32> = verts
                        .iter()
                        .copied()
                        .filter(|&v| field[v as usize] < 0.0)
                        .collect();
                    let outside: Vec<u32> = verts
                        .iter()
                        .copied()
                        .filter(|&v| field[v as usize] >= 0.0)
                        .collect();
                    let polygon: Vec<u32> = match (inside.len(), outside.len()) {
                        (1, 3) => outside.iter().map(|&o| on_edge(&mut b, inside[0], o)).collect(),
                        (3, 1) => inside.iter().map(|&n| on_edge(&mut b, n, outside[0])).collect(),
                        (2, 2) => vec![
                            on_edge(&mut b, inside[0], outside[0]),
                            on_edge(&mut b, inside[0], outside[1]),
                            on_edge(&mut b, inside[1], outside[1]),
                            on_edge(&mut b, inside[1], outside[0]),
                        ],
                        _ => continue,
                    };
                    let centroid = |vs: &[u32]| {
                        vs.iter().fold(Vec3::ZERO, |acc, &v| acc + pos(v)) / vs.len() as f64
                    };
                    let outward = centroid(&outside) - centroid(&inside);
                    for t in 1..polygon.len() - 1 {
                        let mut tri = [polygon[0], polygon[t], polygon[t + 1]];
                        let [p0, p1, p2] = tri.map(|v| b.vertices[v as usize]);
                        let n = (p1 - p0).cross(p2 - p0);
                        if triangle_area(p0, p1, p2) <= 1e-18 {
                            continue;
                        }
                        if n.dot(outward) < 0.0 {
                            tri.swap(1, 2);
                        }
                        b.triangles.push(tri);
                    }
                }
            }
        }
    }
    b.finish()
}
