//! Exact splitting of triangle meshes by axis-aligned planes.
//!
//! Triangles crossing a plane are cut into one triangle on the lone-vertex
//! side and a fanned quad on the other, preserving winding. Cut vertices are
//! snapped onto the plane so repeated cuts by the same plane are no-ops.

use serde::{Deserialize, Serialize};

use super::mesh::{MeshBuilder, TriangleMesh};
use crate::geometry::{Aabb, Plane1D, Similarity, Vec3};

const NONE: u32 = u32::MAX;

/// A mesh split by the horizontal clip plane.
///
/// Both halves and the section segments stay in object space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClippedMesh {
    /// Geometry at or below the plane in world space.
    pub visible: TriangleMesh,
    /// Geometry above the plane.
    pub hidden: TriangleMesh,
    /// Segments where crossing triangles meet the plane.
    pub cross_section_edges: Vec<[Vec3; 2]>,
}

/// Half-space `sign * coord[axis] <= sign * value` in object coordinates,
/// evaluated through an optional world mapping for the clip plane.
#[derive(Debug, Clone, Copy)]
struct Cut {
    axis: usize,
    /// Multiplier applied to the object coordinate before comparing.
    scale: f64,
    offset: f64,
    threshold: f64,
}

impl Cut {
    fn upper(axis: usize, value: f64) -> Self {
        Self {
            axis,
            scale: 1.0,
            offset: 0.0,
            threshold: value,
        }
    }

    fn lower(axis: usize, value: f64) -> Self {
        Self {
            axis,
            scale: -1.0,
            offset: 0.0,
            threshold: -value,
        }
    }

    /// Signed distance-like value; `<= 0` is the kept side.
    fn eval(&self, v: Vec3) -> f64 {
        self.scale * v[self.axis] + self.offset - self.threshold
    }

    /// Object-space coordinate of the plane along `axis`.
    fn plane_coord(&self) -> f64 {
        (self.threshold - self.offset) / self.scale
    }
}

/// Output side under construction, reusing source vertices through a remap table.
struct Side {
    out: MeshBuilder,
    remap: Vec<u32>,
}

impl Side {
    fn new(n_vertices: usize, n_triangles: usize) -> Self {
        Self {
            out: MeshBuilder::with_capacity(n_vertices / 2, n_triangles / 2),
            remap: vec![NONE; n_vertices],
        }
    }

    fn source(&mut self, src: &[Vec3], i: u32) -> u32 {
        let slot = &mut self.remap[i as usize];
        if *slot == NONE {
            *slot = self.out.push_vertex(src[i as usize]);
        }
        *slot
    }
}

/// A triangle corner in the middle of splitting: either a source vertex or a new cut point.
#[derive(Clone, Copy)]
enum Corner {
    Source(u32),
    Cut(Vec3),
}

impl Side {
    fn corner(&mut self, src: &[Vec3], c: Corner) -> u32 {
        match c {
            Corner::Source(i) => self.source(src, i),
            Corner::Cut(p) => self.out.push_vertex(p),
        }
    }

    fn push(&mut self, src: &[Vec3], tri: [Corner; 3]) {
        let idx = tri.map(|c| self.corner(src, c));
        self.out.triangles.push(idx);
    }
}

struct SplitResult {
    below: TriangleMesh,
    above: Option<TriangleMesh>,
    segments: Vec<[Vec3; 2]>,
}

fn cut_point(src: &[Vec3], d: &[f64], i: u32, j: u32, cut: &Cut) -> Vec3 {
    // canonical edge orientation so both neighbours compute identical points
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let (pi, pj) = (src[i as usize], src[j as usize]);
    let (di, dj) = (d[i as usize], d[j as usize]);
    let s = di / (di - dj);
    (pi + (pj - pi) * s).with_axis(cut.axis, cut.plane_coord())
}

fn split(mesh: &TriangleMesh, cut: &Cut, keep_above: bool) -> SplitResult {
    let src = mesh.vertices();
    let d: Vec<f64> = src.iter().map(|&v| cut.eval(v)).collect();
    let n_tri = mesh.triangle_count();
    let mut below = Side::new(src.len(), n_tri);
    let mut above = keep_above.then(|| Side::new(src.len(), n_tri));
    let mut segments = Vec::new();

    for &tri in mesh.triangles() {
        let dv = tri.map(|i| d[i as usize]);
        if dv.iter().all(|&x| x <= 0.0) {
            below.push(src, tri.map(Corner::Source));
            continue;
        }
        if dv.iter().all(|&x| x >= 0.0) {
            if let Some(a) = above.as_mut() {
                a.push(src, tri.map(Corner::Source));
            }
            continue;
        }
        // crossing: at least one strictly negative and one strictly positive
        if let Some(z) = (0..3).find(|&k| dv[k] == 0.0) {
            let (a, b, c) = (tri[z], tri[(z + 1) % 3], tri[(z + 2) % 3]);
            let q = cut_point(src, &d, b, c, cut);
            let first = [Corner::Source(a), Corner::Source(b), Corner::Cut(q)];
            let second = [Corner::Source(a), Corner::Cut(q), Corner::Source(c)];
            let (lo, hi) = if d[b as usize] < 0.0 {
                (first, second)
            } else {
                (second, first)
            };
            below.push(src, lo);
            if let Some(s) = above.as_mut() {
                s.push(src, hi);
            }
            segments.push([src[a as usize], q]);
            continue;
        }
        // the lone vertex is the one whose side differs from the other two
        let neg = dv.map(|x| x < 0.0);
        let lone = (0..3)
            .find(|&k| neg[k] != neg[(k + 1) % 3] && neg[k] != neg[(k + 2) % 3])
            .expect("crossing triangle has a lone vertex");
        let (a, b, c) = (tri[lone], tri[(lone + 1) % 3], tri[(lone + 2) % 3]);
        let qab = cut_point(src, &d, a, b, cut);
        let qca = cut_point(src, &d, c, a, cut);
        let tip = [Corner::Source(a), Corner::Cut(qab), Corner::Cut(qca)];
        let quad = [
            [Corner::Cut(qab), Corner::Source(b), Corner::Source(c)],
            [Corner::Cut(qab), Corner::Source(c), Corner::Cut(qca)],
        ];
        if neg[lone] {
            below.push(src, tip);
            if let Some(s) = above.as_mut() {
                quad.into_iter().for_each(|t| s.push(src, t));
            }
        } else {
            quad.into_iter().for_each(|t| below.push(src, t));
            if let Some(s) = above.as_mut() {
                s.push(src, tip);
            }
        }
        segments.push([qab, qca]);
    }
    SplitResult {
        below: below.out.finish(),
        above: above.map(|s| s.out.finish()),
        segments,
    }
}

/// Splits `mesh` by the horizontal plane: world `y <= h` is visible.
pub fn clip_mesh(mesh: &TriangleMesh, plane: Plane1D, to_world: &Similarity) -> ClippedMesh {
    let cut = Cut {
        axis: 1,
        scale: to_world.scale,
        offset: to_world.translation.y,
        threshold: plane.height(),
    };
    let r = split(mesh, &cut, true);
    ClippedMesh {
        visible: r.below,
        hidden: r.above.unwrap_or_default(),
        cross_section_edges: r.segments,
    }
}

/// Keeps only the part of `mesh` inside `bounds` (closed), cutting exactly
/// along its six faces.
pub fn crop_mesh(mesh: &TriangleMesh, bounds: &Aabb) -> TriangleMesh {
    let mut current: Option<TriangleMesh> = None;
    for axis in 0..3 {
        for cut in [Cut::upper(axis, bounds.max[axis]), Cut::lower(axis, bounds.min[axis])] {
            let input = current.as_ref().unwrap_or(mesh);
            if input.is_empty() {
                return TriangleMesh::empty();
            }
            current = Some(split(input, &cut, false).below);
        }
    }
    current.unwrap_or_else(|| mesh.clone())
}
