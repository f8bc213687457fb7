//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("n_points must be a power of two >= 8, got {0}")]
    InvalidPointCount(usize),

    #[error("lambda must be >= 1, got {0}")]
    InvalidLambda(f64),

    #[error("array length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("kappa must be positive, got {0}")]
    InvalidKappa(f64),

    #[error("closed-form leading term requires kappa >= 1 and lambda >= 1, got kappa={kappa}, lambda={lambda}")]
    LeadingTermHypothesis { kappa: f64, lambda: f64 },

    #[error("truncation radius {radius} too small for series order {order} and field bandwidth {bandwidth}")]
    TruncationTooSmall {
        radius: f64,
        order: usize,
        bandwidth: f64,
    },

    #[error("mode set on lambda={mode_lambda} does not match field on lambda={field_lambda}")]
    LambdaMismatch { mode_lambda: f64, field_lambda: f64 },

    #[error("dimension mismatch between operator matrices: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("Schatten order must satisfy p >= 1, got {0}")]
    InvalidSchattenOrder(f64),

    #[error("solver produced a non-finite value at t = {t}; likely blow-up or instability")]
    BlowUp { t: f64 },

    #[error("invalid solver config: {0}")]
    InvalidSolverConfig(String),

    #[error("invalid experiment config: {0}")]
    InvalidExperimentConfig(String),

    #[error("target grid cannot resolve the rescaled spectrum: {0}")]
    InsufficientResolution(String),

    #[error("dyadic block requires N >= 2, got {0}")]
    InvalidDyadicBlock(f64),

    #[error("invalid norm parameters: {0}")]
    InvalidNormParams(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed field CSV: {0}")]
    MalformedCsv(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
