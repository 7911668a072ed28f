use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    PowerIterationStalled { iterations: usize, estimate: f64 },

    #[error("proximal scalar r = {r} must exceed beta * rho(A^T A) = {bound}")]
    ProximalTooSmall { r: f64, bound: f64 },

    #[error("numerical failure at iteration {iteration}: {reason}")]
    NumericalFailure { iteration: usize, reason: String },

    #[error("problem too large for dense certification: n + m = {size} exceeds {limit}")]
    TooLargeForCertification { size: usize, limit: usize },

    #[error("certification needs {needed} consecutive iterates, got {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("reference solution is not a saddle point (max KKT residual {residual:e})")]
    UnreliableReference { residual: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dataset is not linearly separable after {attempts} draws; increase the class separation")]
    NonSeparable { attempts: usize },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} file {}: {reason}", path.display())]
    Format {
        format: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
