//! The inspected object: mesh ingestion, procedural lattices, plane
//! clipping, cropping to a focus volume, defects and target rods.

mod clip;
mod defects;
mod io;
mod lattice;
mod mesh;

use thiserror::Error;

pub use clip::{clip_mesh, crop_mesh, ClippedMesh};
pub use defects::{
    cell_capacity, place_defects, rods_for_target, Axis, DefectRegion, RodMarker,
    DEFECT_RADIUS_FRACTION,
};
pub use io::{load_mesh, normalize, to_stl_binary, LoadedMesh, MeshFormat, SourceLocation, NORMALIZATION_MARGIN};
pub use lattice::{generate_lattice, LatticePattern, LatticeSpec};
pub use mesh::{triangle_area, TriangleMesh};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectError {
    #[error("parse error at {location}: {message}")]
    Parse {
        location: SourceLocation,
        message: String,
    },
    #[error("mesh has no usable triangles")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("cannot place {requested} defects at depth {depth}: only {capacity} cells")]
    DefectCapacity {
        requested: usize,
        depth: u32,
        capacity: u64,
    },
}
