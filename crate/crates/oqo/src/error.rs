use thiserror::Error;

#[derive(Debug, Error)]
pub enum OqoError {
    #[error("invalid dimension {0}: need D >= 2")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid state spec: {0}")]
    InvalidState(String),
    #[error("operator not hermitean (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("cutoff unfaithful: {0}")]
    CutoffUnfaithful(String),
    #[error("grid coverage: {0}")]
    GridCoverage(String),
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("overflow in {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, OqoError>;
