use thiserror::Error;

/// Failure modes of the tomography library.
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("index {index} out of range 0..={max}")]
    Index { index: usize, max: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design matrix for s = {s} is rank deficient (condition estimate {condition:.3e})")]
    Conditioning { s: usize, condition: f64 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("need at least {required} phase points, got {got}")]
    InsufficientPhases { required: usize, got: usize },

    #[error("quadrature grid too coarse: round-trip error {error:.3e} exceeds {threshold:.1e}")]
    GridTooCoarse { error: f64, threshold: f64 },

    #[error("data inconsistent with the model: {0}")]
    DataInconsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TomoError> = std::result::Result<T, E>;
