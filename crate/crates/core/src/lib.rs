//! Bottleneck (infinity-order) transport distances between finite measures,
//! and the shift criterion for uniformly spread point sets.
//!
//! * [`geometry`]: windows, point configurations, grid measures.
//! * [`transport`]: transport plans, marginals, radius, composition, averaging.
//! * [`bottleneck`]: exact distances via threshold max-flow, with certificates.
//! * [`criterion`]: shift distances, lattice and Lebesgue distances, Cesaro
//!   averages, shift bijections, and window-growth classification.
//! * [`generators`]: reproducible point-set families.

pub mod bottleneck;
pub mod criterion;
pub mod error;
mod flow;
pub mod generators;
pub mod geometry;
pub mod quantum;
pub mod transport;

pub use bottleneck::{
    bottleneck_distance, brute_force_bottleneck, candidate_radii, feasible_at, point_to_grid_distance, DistanceResult,
    Feasibility, HallViolator,
};
pub use criterion::{
    cesaro_average, growth_analysis, lattice_displacement, lebesgue_distance, shift_bijection, shift_distance,
    shift_sweep, shift_triangle, verify_chain, ShiftGrid,
};
pub use error::{Error, Result};
pub use generators::{generate, GeneratorKind, GeneratorSpec};
pub use geometry::{Boundary, GridMeasure, Point, PointConfiguration, Window};
pub use quantum::Quantum;
pub use transport::{Measure, MeasureRef, TransportPlan};

/// Version tag carried by every serialized report.
pub const SCHEMA_VERSION: u32 = 1;
