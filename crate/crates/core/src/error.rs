use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An arithmetic operation was applied outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A malformed instance or config file; `field` names the offending entry.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    /// A solver stopped before reaching its tolerance. `best_gap` is the
    /// certified optimality gap of the last iterate, as a decimal string.
    #[error("solver did not converge after {iterations} iterations (best gap {best_gap})")]
    NonConvergence { iterations: usize, best_gap: String },

    #[error("matrix is singular or not certifiably invertible: {0}")]
    Singular(String),

    #[error("matrix is not positive definite: {0}")]
    Indefinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
