use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavenumber {k} is too small: the grid needs at least 8 nodes per side (4k >= 8)")]
    ResolutionTooCoarse { k: f64 },

    #[error("grid needs at least 8 nodes per side, got {0}")]
    GridTooSmall(usize),

    #[error("linear index {idx} out of range for grid with {len} nodes")]
    IndexOutOfRange { idx: usize, len: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown example {name:?}; valid names: {valid}")]
    UnknownExample { name: String, valid: String },

    #[error("non-finite coefficient at node {idx} ({x:.4}, {y:.4})")]
    NonFiniteCoefficient { idx: usize, x: f64, y: f64 },

    #[error("singular factorization at pivot {pivot}; try a different grid size or wavenumber")]
    Singular { pivot: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("iterative solver hit its cap of {iterations} iterations, relative residual {residual:.3e}")]
    IterationCap { iterations: usize, residual: f64 },

    #[error("problem too large for dense mode: N = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
