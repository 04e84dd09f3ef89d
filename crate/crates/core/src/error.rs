use thiserror::Error;

/// Errors produced by the filtering library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NonFinite(_) | Error::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
