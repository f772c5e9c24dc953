//! Marked regions of interest and the target rods that point at them.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ObjectError;
use crate::geometry::{path_to_aabb, Aabb, OctPath, Vec3};

/// Defect sphere radius as a fraction of its lowest-level cell side.
pub const DEFECT_RADIUS_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRegion {
    pub id: u32,
    pub center: Vec3,
    pub radius: f64,
    pub cell_path: OctPath,
}

impl DefectRegion {
    pub fn cell(&self) -> Aabb {
        path_to_aabb(&Aabb::UNIT, &self.cell_path).expect("unit root is a cube")
    }

    /// The sphere never straddles a cell border.
    pub fn is_contained(&self) -> bool {
        self.cell().contains_sphere(self.center, self.radius)
    }
}

/// Number of cells at `depth`, `None` on overflow.
pub fn cell_capacity(depth: u32) -> Option<u64> {
    8u64.checked_pow(depth)
}

/// Places `count` defects in distinct depth-`depth` cells, each centred in its
/// cell. Ids run `1..=count`.
pub fn place_defects(seed: u64, depth: u32, count: usize) -> Result<Vec<DefectRegion>, ObjectError> {
    let capacity = cell_capacity(depth)
        .filter(|&c| c <= usize::MAX as u64)
        .ok_or(ObjectError::DefectCapacity {
            requested: count,
            depth,
            capacity: u64::MAX,
        })?;
    if count as u64 > capacity {
        return Err(ObjectError::DefectCapacity {
            requested: count,
            depth,
            capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = sample(&mut rng, capacity as usize, count);
    Ok(cells
        .iter()
        .enumerate()
        .map(|(i, linear)| {
            let cell_path = path_from_linear(linear as u64, depth);
            let cell = path_to_aabb(&Aabb::UNIT, &cell_path).expect("unit root is a cube");
            DefectRegion {
                id: i as u32 + 1,
                center: cell.center(),
                radius: DEFECT_RADIUS_FRACTION * cell.extents().x,
                cell_path,
            }
        })
        .collect())
}

/// Base-8 digits of `linear`, most significant first.
fn path_from_linear(linear: u64, depth: u32) -> OctPath {
    let digits = (0..depth)
        .rev()
        .map(|level| ((linear >> (3 * level)) & 7) as u8)
        .collect::<Vec<_>>();
    OctPath::from_indices(&digits).expect("base-8 digits are valid octants")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Marker rod parallel to `axis` spanning the object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodMarker {
    pub axis: Axis,
    pub through: Vec3,
}

impl RodMarker {
    pub fn endpoints(&self) -> [Vec3; 2] {
        let a = self.axis.index();
        [self.through.with_axis(a, 0.0), self.through.with_axis(a, 1.0)]
    }

    pub fn contains(&self, p: Vec3, tolerance: f64) -> bool {
        let a = self.axis.index();
        (0..3).all(|k| k == a || (p[k] - self.through[k]).abs() <= tolerance)
            && (-tolerance..=1.0 + tolerance).contains(&p[a])
    }
}

pub fn rods_for_target(target: Vec3) -> [RodMarker; 3] {
    Axis::ALL.map(|axis| RodMarker {
        axis,
        through: target,
    })
}
