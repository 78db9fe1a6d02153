//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A pivot of the Cholesky factorization fell below the
    /// positive-definiteness threshold `dim * eps * max|a|`.
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    /// A general square matrix could not be inverted.
    #[error("matrix is singular")]
    SingularMatrix,

    /// The covariance matrix is degenerate at a domain point.
    #[error("degenerate covariance at t = {point:?}")]
    DegenerateCovariance { point: Vec<f64> },

    /// A tabulated model or drift was evaluated off its table.
    #[error("point {point:?} is outside the tabulated domain")]
    OutsideTable { point: Vec<f64> },

    /// The iterative solver exceeded its iteration cap.
    #[error("solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// Active-set enumeration was requested above its dimension cap.
    #[error("dimension {dim} exceeds the enumeration cap {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    /// The dual ratio is undefined for an all-zero weight vector.
    #[error("weight vector is zero")]
    ZeroWeight,

    /// Correlation outside [-1, 1].
    #[error("correlation {r} is outside [-1, 1]")]
    InvalidCorrelation { r: f64 },

    /// Rate computation requires the threshold level to exceed u0.
    #[error("u = {u} does not exceed the threshold floor u0 = {u0}")]
    ThresholdNotExceeded { u: f64, u0: f64 },

    /// The joint covariance for simulation would exceed the size cap.
    #[error("joint covariance dimension {size} exceeds the cap {cap}")]
    DimensionCap { size: usize, cap: usize },

    /// Invalid argument or configuration; the message names the offending field.
    #[error("invalid input: {message}")]
    Invalid { message: String },
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid {
            message: message.into(),
        }
    }
}
