use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} outside window [{lo}, {hi}]")]
    OutOfWindow { index: i64, lo: i64, hi: i64 },

    #[error("window mismatch: [{lo_a}, {hi_a}] vs [{lo_b}, {hi_b}]")]
    WindowMismatch {
        lo_a: i64,
        hi_a: i64,
        lo_b: i64,
        hi_b: i64,
    },

    #[error("invalid window: lo {lo} > hi {hi}")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("class label {label} outside [1, {max}]")]
    ClassOutOfRange { label: u32, max: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
