use thiserror::Error;

use crate::validation::ValidationReport;

#[derive(Debug, Error)]
pub enum FellError {
    /// An argument lies outside the domain of the operation (unknown unit, n = 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data: index out of range, table of the wrong shape.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("operands belong to different bundles")]
    BundleMismatch,

    /// The input was well formed but violates the algebraic axioms.
    #[error("validation failed: {0}")]
    Validation(ValidationReport),

    #[error("operator does not preserve the null space of the Gram form (leakage {leakage:.3e})")]
    NotModuleMap { leakage: f64 },

    #[error("data is not in the image of the regular representation at arrow {arrow} (residual {residual:.3e})")]
    NotInImage { arrow: usize, residual: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FellError> = std::result::Result<T, E>;
