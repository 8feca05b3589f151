use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error(
        "matrix is singular or ill-conditioned: eigenvalue {eigenvalue:e} (max {max_eigenvalue:e})"
    )]
    Singular {
        eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite parameters after update {update}")]
    NonFinite { update: u64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension { op, expected, got }
    }

    /// True for failures the CLI reports as numerical aborts rather than
    /// configuration problems.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NonFinite { .. })
    }
}
