use thiserror::Error;

/// Errors raised by model construction, numerics and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative time t={0}")]
    NegativeTime(f64),

    #[error("time t={t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "power iteration did not converge after {iterations} iterations for matrix {matrix:?}"
    )]
    NoConvergence {
        iterations: usize,
        matrix: Vec<Vec<f64>>,
    },

    #[error("event cap {cap} exceeded at t={t}")]
    EventCap { cap: usize, t: f64 },

    #[error("population cap {cap} exceeded at t={t}")]
    PopulationCap { cap: usize, t: f64 },

    #[error("riccati step produced a negative component {value} at t={t}")]
    Negativity { value: f64, t: f64 },

    #[error("path {index}: {source}")]
    Path {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
