use thiserror::Error;

/// Errors raised by the numerical routines and the report driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested point maps to infinite momentum (|α| = π).
    #[error("momentum is infinite at angle {angle}")]
    InfiniteMomentum { angle: f64 },

    #[error("singular kernel argument: {0}")]
    Singular(String),

    /// Adaptive quadrature ran out of depth; carries the best available estimate.
    #[error("quadrature did not converge (estimate {estimate:e}, error {error_estimate:e})")]
    NonConvergence { estimate: f64, error_estimate: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    Eigensolver { sweeps: usize, off_norm: f64 },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
