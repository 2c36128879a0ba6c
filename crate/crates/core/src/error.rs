use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("transmitter {tx} coincides with cell {cell}")]
    SingularSource { tx: usize, cell: usize },

    #[error("forward system is singular (condition estimate {condition_estimate:.3e})")]
    SingularSystem { condition_estimate: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("eigenfunction series did not converge below order {order}")]
    NonConvergence { order: usize },

    #[error("invalid contrast value {value} at pixel {index}")]
    InvalidContrast { index: usize, value: f64 },

    #[error("malformed IDX file: {0}")]
    BadIdxFile(String),

    #[error("scatterer regions overlap: {0}")]
    OverlapViolation(String),

    #[error("signal power is zero, SNR is undefined")]
    ZeroSignal,

    #[error("sample count {0} is not divisible by 4")]
    IndivisibleCount(usize),

    #[error("sample {0} has no quality category")]
    Uncategorized(String),

    #[error("category {category} holds {available} samples, {needed} requested")]
    InsufficientCategory {
        category: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("invalid proportions: {0}")]
    InvalidProportions(String),

    #[error("requested {requested} samples from a population of {available}")]
    InsufficientSamples { requested: usize, available: usize },

    #[error("beta {0} outside [0, 1]")]
    BetaOutOfRange(f64),

    #[error("field set carries no total fields")]
    MissingFields,

    #[error("{path}: bad magic bytes")]
    BadMagic { path: PathBuf },

    #[error("unsupported container version {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },

    #[error("{path}: truncated file")]
    TruncatedFile { path: PathBuf },

    #[error("{path}: unsupported dtype code {code}")]
    UnsupportedDtype { path: PathBuf, code: u8 },

    #[error("container is inconsistent: {0}")]
    CorruptContainer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error class, as documented in the README.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::BetaOutOfRange(_)
            | Error::InvalidProportions(_)
            | Error::InvalidContrast { .. }
            | Error::DimensionMismatch { .. } => 2,
            Error::InsufficientCategory { .. }
            | Error::InsufficientSamples { .. }
            | Error::IndivisibleCount(_)
            | Error::Uncategorized(_) => 3,
            Error::BadMagic { .. } => 4,
            Error::VersionMismatch { .. } => 5,
            Error::TruncatedFile { .. } => 6,
            Error::UnsupportedDtype { .. } | Error::CorruptContainer(_) | Error::BadIdxFile(_) => 7,
            Error::SingularSource { .. }
            | Error::SingularSystem { .. }
            | Error::NonConvergence { .. }
            | Error::OverlapViolation(_)
            | Error::ZeroSignal
            | Error::MissingFields => 8,
            Error::Io(_) | Error::Json(_) => 9,
        }
    }
}
