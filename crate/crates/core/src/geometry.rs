//! Spatial primitives: vectors, cubes, octant addressing, rays and the
//! rotation-free similarities that map a focus volume onto the stage.
//!
//! Object space and the stage are both the unit cube. A depth-`k` octant
//! therefore maps onto the stage with scale exactly `2^k`.

use std::fmt;
use std::ops::{Add, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when checking that a box is a cube.
pub const CUBE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box is not a cube: extents {0:?}")]
    NotACube([f64; 3]),
    #[error("degenerate box with side {0}")]
    Degenerate(f64),
    #[error("point {0} lies outside {1}")]
    OutOfBounds(Vec3, Aabb),
    #[error("octant index {0} is out of range 0..8")]
    InvalidOctant(u8),
    #[error("ray direction {0} cannot be normalized")]
    InvalidDirection(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const ONE: Vec3 = Vec3::new(1.0, 1.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Vec3> {
        let len = self.length();
        (len.is_finite() && len > 0.0).then(|| self / len)
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn clamp(self, lo: Vec3, hi: Vec3) -> Vec3 {
        Vec3::new(
            self.x.clamp(lo.x, hi.x),
            self.y.clamp(lo.y, hi.y),
            self.z.clamp(lo.z, hi.z),
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Component along `axis` (0 = x, 1 = y, 2 = z).
    pub fn axis(self, axis: usize) -> f64 {
        self[axis]
    }

    pub fn with_axis(mut self, axis: usize, value: f64) -> Vec3 {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            _ => self.z = value,
        }
        self
    }

    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 axis {i} out of range"),
        }
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box. Focus volumes and octants are always cubes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const UNIT: Aabb = Aabb {
        min: Vec3::ZERO,
        max: Vec3::ONE,
    };

    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(
            min.x <= max.x && min.y <= max.y && min.z <= max.z,
            "inverted box {min} {max}"
        );
        Self { min, max }
    }

    pub fn cube(min: Vec3, side: f64) -> Self {
        Self::new(min, min + Vec3::splat(side))
    }

    pub fn centered(center: Vec3, side: f64) -> Self {
        let half = Vec3::splat(side * 0.5);
        Self::new(center - half, center + half)
    }

    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn is_cube(&self) -> bool {
        let e = self.extents();
        let largest = e.x.max(e.y).max(e.z);
        let smallest = e.x.min(e.y).min(e.z);
        smallest >= 0.0 && largest - smallest <= CUBE_TOLERANCE * largest.max(f64::MIN_POSITIVE)
    }

    /// Side length of a cube; errors when the box is not one.
    pub fn side(&self) -> Result<f64, GeometryError> {
        if self.is_cube() {
            Ok(self.extents().x)
        } else {
            Err(GeometryError::NotACube(self.extents().to_array()))
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Closed containment of a sphere.
    pub fn contains_sphere(&self, center: Vec3, radius: f64) -> bool {
        (0..3).all(|a| center[a] - radius >= self.min[a] && center[a] + radius <= self.max[a])
    }

    pub fn corners(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            Vec3::new(
                if i & 1 != 0 { self.max.x } else { self.min.x },
                if i & 2 != 0 { self.max.y } else { self.min.y },
                if i & 4 != 0 { self.max.z } else { self.min.z },
            )
        })
    }

    /// Volume of the intersection with `other` (zero when disjoint or touching).
    pub fn overlap_volume(&self, other: &Aabb) -> f64 {
        let lo = self.min.max(other.min);
        let hi = self.max.min(other.max);
        let e = hi - lo;
        if e.x <= 0.0 || e.y <= 0.0 || e.z <= 0.0 {
            0.0
        } else {
            e.x * e.y * e.z
        }
    }

    pub fn max_abs_diff(&self, other: &Aabb) -> f64 {
        self.min
            .max_abs_diff(other.min)
            .max(self.max.max_abs_diff(other.max))
    }
}

impl fmt::Display for Aabb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} .. {}]", self.min, self.max)
    }
}

/// Child index inside a cube: bit0 = upper x half, bit1 = upper y, bit2 = upper z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct OctantIndex(u8);

impl OctantIndex {
    pub fn new(value: u8) -> Result<Self, GeometryError> {
        if value < 8 {
            Ok(Self(value))
        } else {
            Err(GeometryError::InvalidOctant(value))
        }
    }

    pub fn all() -> impl Iterator<Item = OctantIndex> {
        (0..8).map(OctantIndex)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// True when this octant occupies the upper half along `axis`.
    pub fn is_upper(self, axis: usize) -> bool {
        self.0 & (1 << axis) != 0
    }

    pub(crate) fn from_bits(x: bool, y: bool, z: bool) -> Self {
        Self(u8::from(x) | (u8::from(y) << 1) | (u8::from(z) << 2))
    }
}

impl TryFrom<u8> for OctantIndex {
    type Error = GeometryError;
    fn try_from(v: u8) -> Result<Self, GeometryError> {
        OctantIndex::new(v)
    }
}

impl From<OctantIndex> for u8 {
    fn from(o: OctantIndex) -> u8 {
        o.0
    }
}

impl fmt::Display for OctantIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Root-first sequence of octant choices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OctPath(pub Vec<OctantIndex>);

impl OctPath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices(indices: &[u8]) -> Result<Self, GeometryError> {
        indices
            .iter()
            .map(|&i| OctantIndex::new(i))
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[OctantIndex] {
        &self.0
    }

    /// Integer cell coordinates on the `2^depth` grid.
    pub fn cell_coords(&self) -> [u64; 3] {
        let mut c = [0u64; 3];
        for idx in &self.0 {
            for (a, coord) in c.iter_mut().enumerate() {
                *coord = (*coord << 1) | u64::from(idx.is_upper(a));
            }
        }
        c
    }

    /// Inverse of [`OctPath::cell_coords`].
    pub fn from_cell_coords(coords: [u64; 3], depth: usize) -> Self {
        let indices = (0..depth)
            .map(|level| {
                let shift = depth - 1 - level;
                OctantIndex::from_bits(
                    (coords[0] >> shift) & 1 == 1,
                    (coords[1] >> shift) & 1 == 1,
                    (coords[2] >> shift) & 1 == 1,
                )
            })
            .collect();
        Self(indices)
    }

    /// Top-level octant of this path, if any.
    pub fn top(&self) -> Option<OctantIndex> {
        self.0.first().copied()
    }
}

impl fmt::Display for OctPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{idx}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRay")]
pub struct Ray {
    pub origin: Vec3,
    #[serde(rename = "dir")]
    pub direction: Vec3,
}

#[derive(Deserialize)]
struct RawRay {
    origin: Vec3,
    dir: Vec3,
}

impl TryFrom<RawRay> for Ray {
    type Error = GeometryError;

    /// Unit-length directions are kept bit-exact so logs re-serialize unchanged.
    fn try_from(raw: RawRay) -> Result<Self, Self::Error> {
        let ray = Ray::new(raw.origin, raw.dir)?;
        if (raw.dir.length() - 1.0).abs() <= 1e-12 {
            return Ok(Ray {
                origin: raw.origin,
                direction: raw.dir,
            });
        }
        Ok(ray)
    }
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let direction = direction
            .normalized()
            .filter(|_| origin.is_finite())
            .ok_or(GeometryError::InvalidDirection(direction))?;
        Ok(Self { origin, direction })
    }

    /// Ray from `origin` through `target`.
    pub fn through(origin: Vec3, target: Vec3) -> Result<Self, GeometryError> {
        Self::new(origin, target - origin)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Horizontal clip plane height in stage space, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane1D {
    height: f64,
}

impl Plane1D {
    pub const TOP: Plane1D = Plane1D { height: 1.0 };

    /// Clamps `height` into `[0, 1]`; NaN maps to the top (nothing hidden).
    pub fn new(height: f64) -> Self {
        let height = if height.is_nan() {
            1.0
        } else {
            height.clamp(0.0, 1.0)
        };
        Self { height }
    }

    pub fn height(self) -> f64 {
        self.height
    }
}

impl Default for Plane1D {
    fn default() -> Self {
        Self::TOP
    }
}

/// Rotation-free uniform similarity: `world = scale * object + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub translation: Vec3,
}

impl Default for Similarity {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        scale: 1.0,
        translation: Vec3::ZERO,
    };

    pub fn new(scale: f64, translation: Vec3) -> Self {
        debug_assert!(scale > 0.0, "similarity scale must be positive");
        Self { scale, translation }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        p * self.scale + self.translation
    }

    pub fn apply_length(&self, len: f64) -> f64 {
        len * self.scale
    }

    pub fn apply_box(&self, b: &Aabb) -> Aabb {
        Aabb::new(self.apply(b.min), self.apply(b.max))
    }

    pub fn inverse(&self) -> Similarity {
        let inv = 1.0 / self.scale;
        Similarity::new(inv, self.translation * -inv)
    }

    pub fn inverse_apply(&self, p: Vec3) -> Vec3 {
        (p - self.translation) / self.scale
    }

    /// Maps a world-space ray into object space; parameters scale by `1/scale`.
    pub fn inverse_ray(&self, ray: &Ray) -> Ray {
        Ray {
            origin: self.inverse_apply(ray.origin),
            direction: ray.direction,
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity::new(
            self.scale * inner.scale,
            self.translation + inner.translation * self.scale,
        )
    }
}

/// Child cube of `parent` selected by `index`.
pub fn octant_aabb(parent: &Aabb, index: OctantIndex) -> Result<Aabb, GeometryError> {
    parent.side()?;
    let mid = parent.center();
    let mut min = parent.min;
    let mut max = mid;
    for a in 0..3 {
        if index.is_upper(a) {
            min = min.with_axis(a, mid[a]);
            max = max.with_axis(a, parent.max[a]);
        }
    }
    Ok(Aabb::new(min, max))
}

/// All eight children, in index order.
pub fn octants(parent: &Aabb) -> Result<[Aabb; 8], GeometryError> {
    parent.side()?;
    let mut out = [*parent; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = octant_aabb(parent, OctantIndex(i as u8))?;
    }
    Ok(out)
}

pub fn path_to_aabb(root: &Aabb, path: &OctPath) -> Result<Aabb, GeometryError> {
    path.indices()
        .iter()
        .try_fold(*root, |b, &idx| octant_aabb(&b, idx))
}

/// The depth-`depth` cell containing `p`. Points on an internal boundary
/// resolve to the lower cell.
pub fn locate_point(root: &Aabb, depth: usize, p: Vec3) -> Result<OctPath, GeometryError> {
    root.side()?;
    if !p.is_finite() || !root.contains(p) {
        return Err(GeometryError::OutOfBounds(p, *root));
    }
    let mut cell = *root;
    let mut indices = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mid = cell.center();
        let idx = OctantIndex::from_bits(p.x > mid.x, p.y > mid.y, p.z > mid.z);
        cell = octant_aabb(&cell, idx)?;
        indices.push(idx);
    }
    Ok(OctPath(indices))
}

/// Entry/exit parameters of a ray crossing a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t_enter: f64,
    pub t_exit: f64,
}

impl RayHit {
    /// Entry parameter clamped to the ray origin.
    pub fn entry(&self) -> f64 {
        self.t_enter.max(0.0)
    }
}

/// Slab test. `t_enter` may be negative when the origin is inside the box.
pub fn ray_aabb(ray: &Ray, b: &Aabb) -> Option<RayHit> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        let o = ray.origin[a];
        let d = ray.direction[a];
        if d == 0.0 {
            if o < b.min[a] || o > b.max[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (t0, t1) = {
            let t0 = (b.min[a] - o) * inv;
            let t1 = (b.max[a] - o) * inv;
            if t0 <= t1 {
                (t0, t1)
            } else {
                (t1, t0)
            }
        };
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
    }
    (t_exit >= t_enter.max(0.0)).then_some(RayHit { t_enter, t_exit })
}

/// The first child of `focus` the ray enters; exact ties go to the lowest index.
pub fn pick_child_octant(ray: &Ray, focus: &Aabb) -> Option<OctantIndex> {
    let children = octants(focus).ok()?;
    let mut best: Option<(f64, OctantIndex)> = None;
    for (i, child) in children.iter().enumerate() {
        if let Some(hit) = ray_aabb(ray, child) {
            let t = hit.entry();
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, OctantIndex(i as u8)));
            }
        }
    }
    best.map(|(_, idx)| idx)
}

/// Möller–Trumbore intersection; returns the ray parameter of the hit.
pub fn ray_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.direction.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t >= 0.0).then_some(t)
}

/// Both ray parameters where the ray meets a sphere surface, nearest first.
pub fn ray_sphere(ray: &Ray, center: Vec3, radius: f64) -> Option<(f64, f64)> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.direction);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let (t0, t1) = (-b - root, -b + root);
    (t1 >= 0.0).then_some((t0, t1))
}

/// The similarity mapping `focus` onto `stage`.
// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn focus_to_stage(focus: &Aabb, stage: &Aabb) -> Result<Similarity, GeometryError> {
    let focus_side = focus.side()?;
    let stage_side = stage.side()?;
    if !(focus_side > 0.0) || !(stage_side > 0.0) {
        return Err(GeometryError::Degenerate(focus_side.min(stage_side)));
    }
    let scale = stage_side / focus_side;
    Ok(Similarity::new(scale, stage.min - focus.min * scale))
}

/// Blends two similarities: log-space scale, linear translation. Endpoints are exact.
pub fn interpolate(a: &Similarity, b: &Similarity, u: f64) -> Similarity {
    if !(0.0..=1.0).contains(&u) && cfg!(debug_assertions) {
        log::warn!("interpolation parameter {u} outside [0, 1], clamping");
    }
    let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
    if u == 0.0 {
        return *a;
    }
    if u == 1.0 {
        return *b;
    }
    let scale = a.scale * (b.scale / a.scale).powf(u);
    let translation = a.translation + (b.translation - a.translation) * u;
    Similarity::new(scale, translation)
}
