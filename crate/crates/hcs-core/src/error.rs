//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HcsError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("entry {index} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("quantized signals come from different quantizers")]
    MismatchedQuantizer,

    #[error("invalid candidate interval {candidate}: {reason}")]
    InvalidCandidate {
        candidate: usize,
        reason: &'static str,
    },

    #[error("coordinate {index} sits on an interval boundary; margin is not positive")]
    DegeneratePosition { index: usize },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("vector is not unit norm (|x| = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HcsError>;
