//! Lattice Boltzmann building blocks for layout and energy benchmarking.
//!
//! The crate provides the in-memory side of the benchmark suite:
//!
//! * [`velocity`] — discrete velocity sets (D2Q9, D2Q37, custom shells),
//! * [`geometry`] — lattice extents, halo widths and site coordinates,
//! * [`layout`] — the four storage layouts (AoS, SoA, CSoA, CAoSoA) as
//!   bijective index maps with alignment guarantees,
//! * [`field`] — population fields stored under a chosen layout, with
//!   layout-blind checksums and conversions,
//! * [`kernels`] — the `propagate` and `collide` kernels, each with a
//!   scalar reference path and a layout-aware threaded path.
//!
//! Everything here is deterministic: given the same seed, the same lattice
//! and the same kernel sequence, all layouts and all worker counts produce
//! bitwise-identical logical fields.

pub mod error;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod layout;
pub mod rng;
pub mod velocity;

pub use error::CoreError;
pub use field::{FieldPattern, PopulationField};
pub use geometry::{LatticeGeometry, SiteCoord};
pub use kernels::{
    collide_bgk, collide_bgk_reference, collide_surrogate, collide_surrogate_reference,
    halo_exchange, propagate, propagate_reference, step, step_reference, BgkParams, CollideMode,
    StepBuffers, SurrogateParams, WorkerPlan,
};
pub use layout::{LayoutIndexer, LayoutKind};
pub use velocity::{LatticeModel, VelocitySet};
