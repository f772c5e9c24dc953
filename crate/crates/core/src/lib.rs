//! Progressive-refinement multiscale inspection of dense, homogeneous objects.
//!
//! The crate is engine-agnostic: everything here runs headless and
//! deterministically, so a recorded interaction log can be replayed to
//! reproduce exactly what a viewer showed.
//!
//! - [`geometry`]: cubes, octant addressing, rays and stage similarities.
//! - [`object_model`]: meshes, lattices, clipping and cropping, defects.
//! - [`navigation`]: the focus-stack state machine.
//! - [`study`]: schedules, trials, event logs, replay and probe questions.
//! - [`analysis`]: ANOVA, Wilcoxon, effect sizes and SSQ scoring.
//! - [`scene`]: the self-contained scene document consumed by viewers.

pub mod analysis;
pub mod bridge;
pub mod geometry;
pub mod navigation;
pub mod object_model;
pub mod scene;
pub mod study;

/// Version tag carried by every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
