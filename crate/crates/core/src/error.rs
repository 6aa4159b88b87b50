use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below {threshold:e}")]
    NotPositiveSemidefinite { eigenvalue: f64, threshold: f64 },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
