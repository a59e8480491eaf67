use thiserror::Error;

/// Errors produced by the simulator and bound calculator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {len} modes")]
    ModeIndex { index: usize, len: usize },

    #[error("covariance matrix is not symmetric positive-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("decoding failed: received word is not within the correctable radius")]
    DecodeFailure,

    #[error("oracle codec cannot decode without the transmitted codeword")]
    OracleUnbound,

    #[error("malformed encoding: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
