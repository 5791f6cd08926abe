use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {index} at {coords:?} lies outside the torus window")]
    OutsideWindow { index: usize, coords: Vec<f64> },

    #[error("torus side {side} is not an integer multiple of spacing {spacing}")]
    NonIntegralSpacing { side: f64, spacing: f64 },

    #[error("index {index} out of range (bound {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("measures live on incompatible windows: {0}")]
    WindowMismatch(String),

    #[error("total masses differ: source {source_mass}, target {target_mass}")]
    MassMismatch { source_mass: String, target_mass: String },

    #[error("cell {cell}: assigned mass {assigned} but the cell carries {expected} (quantum units)")]
    CellMassMismatch {
        cell: usize,
        assigned: u128,
        expected: u128,
    },

    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("point count {points} differs from lattice site count {sites}")]
    CountMismatch { points: String, sites: u64 },

    #[error("configuration has non-unit masses; a bijection needs a simple point set")]
    NonUnitMass,

    #[error("instance of size {size} exceeds the cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("mass quantum refinement by {factor} exceeds the cap {cap}")]
    QuantumOverflow { factor: u128, cap: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
