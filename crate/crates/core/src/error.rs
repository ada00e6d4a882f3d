use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate quaternion")]
    DegenerateQuaternion,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("timestamps must be strictly increasing (index {index})")]
    NonIncreasingTime { index: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("underdetermined: need at least {needed} frames, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("no SfM diagnostics (trajectory has no point count)")]
    NoSfmDiagnostics,
    #[error("frame at t={t} has no IMU sample within {max_gap} s")]
    AssociationGap { t: f64, max_gap: f64 },
    #[error("degenerate innovation covariance (condition {condition:e})")]
    DegenerateInnovation { condition: f64 },
    #[error("no observations could be associated with the IMU stream")]
    NoObservations,
    #[error("degenerate scale")]
    DegenerateScale,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
