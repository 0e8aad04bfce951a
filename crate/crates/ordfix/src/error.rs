//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid resolution mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("modulus argument must be positive, got {0}")]
    ModulusDomain(f64),

    #[error("modulus value {value} at t = {t} lies outside (0, 1)")]
    ModulusRange { t: f64, value: f64 },

    #[error("modulus decreases between t = {t0} and t = {t1}")]
    ModulusNotNondecreasing { t0: f64, t1: f64 },

    #[error("initial gap must be positive, got {0}; a zero gap means the start is already fixed")]
    NonPositiveGap(f64),

    #[error("rate must lie in (0, 1), got {0}")]
    RateOutOfRange(f64),

    #[error("pair {index} is not ordered: the checkers require comparable inputs")]
    IncomparablePair { index: usize },

    #[error("operator domain violation: {0}")]
    Domain(String),

    #[error("start verification failed: {0}")]
    StartInconsistent(String),

    #[error("monotone chain violated at iteration {iteration}")]
    ChainViolation { iteration: usize },

    #[error("step norm increased at iteration {iteration}")]
    StepNormIncreased { iteration: usize },

    #[error("maximum iteration count {0} exhausted before the stopping bound was met")]
    MaxIterations(usize),

    #[error("fixed-point residual {residual} exceeds threshold {threshold}")]
    ResidualExceeded { residual: f64, threshold: f64 },

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
