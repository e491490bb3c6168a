use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidInput(String),

    /// A pivot fell below the singularity threshold during LU factorization.
    /// `index` is the (original) column that could not be pivoted.
    #[error("numerically singular matrix: no acceptable pivot for column {index}")]
    NumericallySingular { index: usize },

    #[error("iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("non-finite value at dof {dof}")]
    NonFinite { dof: usize },

    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures that are a property of the discrete problem rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericallySingular { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
