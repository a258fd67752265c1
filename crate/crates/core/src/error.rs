use std::path::PathBuf;

use thiserror::Error;

use crate::tomography::TomographyResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("a channel plan needs at least one pair")]
    EmptyPlan,

    #[error("channel {channel} lies outside the grid bound |n| <= {bound}")]
    GridBound { channel: i32, bound: i32 },

    #[error("noise spectrum row {row}: {reason}")]
    NoiseSpectrum { row: usize, reason: String },

    #[error("not a physical density matrix: {0}")]
    NotPhysical(String),

    #[error("time-tag stream for detector {0} is not sorted")]
    UnsortedStream(u8),

    #[error("expected event count {expected:.3e} exceeds the configured bound {bound}")]
    EventBudget { expected: f64, bound: u64 },

    #[error("tomography design matrix is singular")]
    SingularDesign,

    #[error("tomography input rejected: {0}")]
    DegenerateCounts(String),

    #[error("maximum-likelihood search did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<TomographyResult>,
    },

    #[error("fringe scan is degenerate: {0}")]
    DegenerateScan(String),

    #[error("fringe scan has insufficient phase coverage: {0}")]
    InsufficientCoverage(String),

    #[error("tag {0} carries no basis label")]
    UnlabeledTag(usize),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
