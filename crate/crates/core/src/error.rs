use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TplError {
    /// An argument is outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data is malformed or unusable (non-finite values, too few rows).
    #[error("data error: {0}")]
    Data(String),

    /// A mathematical precondition failed, e.g. a 2x2 block that is not positive definite.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system could not be solved or an iteration failed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Coordinate descent hit its sweep cap while probing a penalty level.
    #[error("coordinate descent did not converge at lambda = {lambda} after {sweeps} sweeps")]
    NotConverged { lambda: f64, sweeps: usize },

    /// Random covariance generation could not be made positive definite.
    #[error("generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, TplError>;

impl TplError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        TplError::Argument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        TplError::Data(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        TplError::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        TplError::Numeric(msg.into())
    }
}
