use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("normalization error: M_{index} must equal 1 (log value {log_value})")]
    Normalization { index: usize, log_value: f64 },
    #[error("log-convexity violated at p = {p}")]
    Convexity { p: usize },
    #[error("not a valid r-sequence: {0}")]
    InvalidRSequence(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("argument {arg} outside the evaluable range [{lo}, {hi}]")]
    Range { arg: f64, lo: f64, hi: f64 },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("numeric guard: {message}")]
    Overflow { message: String, suggested_h: Option<f64> },
    #[error("window pair is numerically orthogonal: |(gamma, psi)| = {0:e}")]
    NearOrthogonal(f64),
    #[error("window is identically zero")]
    ZeroWindow,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
