use thiserror::Error;

/// Errors raised by the decomposition, transform and benchmark routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal model: {0}")]
    InvalidSpec(String),

    #[error("signal-to-noise ratio is undefined: noise has zero norm")]
    UndefinedSnr,

    #[error("relative error is undefined: reference is identically zero on the evaluation window")]
    UndefinedError,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid bandwidth profile: {0}")]
    InvalidProfile(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid band [{low}, {high}] Hz (Nyquist {nyquist} Hz)")]
    InvalidBand { low: f64, high: f64, nyquist: f64 },

    #[error("no admissible curve in the time-frequency representation")]
    NoCurve,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input,
    /// bad configuration or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UndefinedSnr
                | Error::UndefinedError
                | Error::InvalidProfile(_)
                | Error::InvalidCurve(_)
                | Error::NoCurve
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
