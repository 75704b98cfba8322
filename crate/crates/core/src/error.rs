use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: expected {expected} steps, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("quadrature did not converge ({context}): achieved error {achieved:.3e}, tolerance {tolerance:.3e}")]
    Quadrature {
        context: String,
        achieved: f64,
        tolerance: f64,
    },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("estimator failed on path {index}: {source}")]
    Estimator {
        index: usize,
        #[source]
        source: Box<LabError>,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidInput(msg.into())
}

pub(crate) fn ensure_grid(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LabError::GridMismatch { expected, found })
    }
}
