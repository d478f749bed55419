use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite noise increment at step {step}")]
    NonFiniteNoise { step: usize },

    #[error("positivity violated at step {step}: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { step: usize, min_eigenvalue: f64 },

    #[error("replay scheme requires a phase program")]
    MissingReplayProgram,

    #[error("step index {index} past end of grid ({len} steps)")]
    IndexOutOfGrid { index: usize, len: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("missing data for {0}")]
    MissingData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical integrity rather than of configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteNoise { .. } | Error::PositivityViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
