use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel specification `{spec}`: {reason}")]
    KernelSpec { spec: String, reason: String },

    #[error("time ({s}, {t}) outside the kernel domain [0, {horizon}]")]
    Domain { s: f64, t: f64, horizon: f64 },

    #[error("time {0} is not a point of the tabulated grid")]
    OffGrid(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("sample paths live on different grids")]
    GridMismatch,

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("covariance matrix is not positive semidefinite after jitter {jitter:e}")]
    KernelDegenerate { jitter: f64 },

    #[error("sampler `{sampler}` cannot draw from kernel `{kernel}`: {reason}")]
    SamplerUnsupported {
        sampler: String,
        kernel: String,
        reason: String,
    },

    #[error("empty search interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("direction h vanishes on the grid; the limit variable is not identifiable")]
    Unidentifiable,

    #[error("{value} is outside the range of {what}")]
    Range { what: &'static str, value: f64 },

    #[error("metric is degenerate: distinct grid points {0} and {1} are at distance zero")]
    Degenerate(f64, f64),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::KernelSpec { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidParams(_)
                | Error::EmptyInterval { .. }
                | Error::InvalidArgument(_)
                | Error::UnknownStrategy { .. }
                | Error::Config(_)
        )
    }
}
