use std::path::PathBuf;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The input series or window was empty.
    #[error("empty input")]
    Empty,
    /// Not enough observations for the requested operation.
    #[error("not enough data: need at least {needed}, got {got}")]
    NotEnoughData { needed: usize, got: usize },
    /// A value lies outside the domain of the operation.
    #[error("value {value} outside domain: {what}")]
    Domain { what: &'static str, value: f64 },
    /// A parameter violates its constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The series has zero variance where a positive variance is required.
    #[error("degenerate series: {0}")]
    Degenerate(&'static str),
    /// The truncated normal normalizer underflowed.
    #[error("degenerate truncated normal (location {loc}, scale^2 {scale2})")]
    DegenerateNormalizer { loc: f64, scale2: f64 },
    /// The least-squares design matrix is rank deficient.
    #[error("rank-deficient design: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },
    /// Numerical integration did not meet its tolerance.
    #[error("quadrature did not converge (last change {last_change:e})")]
    Quadrature { last_change: f64 },
    /// Every optimizer start produced a non-finite objective.
    #[error("optimizer found no finite objective value")]
    NoFiniteStart,
    /// Every candidate model failed to fit.
    #[error("all model fits failed")]
    AllFitsFailed,
    /// Timestamps are not strictly increasing on a fixed cadence.
    #[error("bad timestamps at row {row}: {reason}")]
    Cadence { row: usize, reason: String },
    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),
    /// Simulation left the admissible range too many times.
    #[error("simulation left bounds at step {step} after {attempts} redraws (last value {last})")]
    SimulationBounds { step: usize, attempts: usize, last: f64 },
    #[error("unknown forecaster id '{0}'")]
    UnknownForecaster(String),
    #[error("no forecasters to report")]
    EmptyReport,
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
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
}

pub type Result<T> = std::result::Result<T, Error>;
