use thiserror::Error;

/// Failures surfaced by the library. Domain and regime problems are caller
/// mistakes; the numerical variants carry whatever partial result exists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("quadrature did not converge (best estimate {estimate_re} + {estimate_im}i, error estimate {error:e})")]
    NoConvergence {
        estimate_re: f64,
        estimate_im: f64,
        error: f64,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("pole: {0}")]
    Pole(String),
}

pub type Result<T> = std::result::Result<T, SleError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SleError::Domain(msg.into()))
}
