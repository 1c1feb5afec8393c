//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time must be {requirement}, got {got}")]
    InvalidTime { requirement: &'static str, got: f64 },

    #[error("target point {xi} outside native grid range [{min}, {max}]")]
    OutOfRange { xi: f64, min: f64, max: f64 },

    #[error("numerical blowup at t = {time}: {what}")]
    Blowup { time: f64, what: String },

    #[error(
        "no-wrap criterion violated: dispersive transport {transport:.3} exceeds \
         available margin {margin:.3} (L = {half_length}, t_end = {t_end})"
    )]
    NoWrapViolation {
        transport: f64,
        margin: f64,
        half_length: f64,
        t_end: f64,
    },

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
