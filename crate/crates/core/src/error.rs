use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("n > 2 required (got n = {n})")]
    TooFewObservations { n: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error(
        "no moment solution: target skewness {target:.6} outside attainable range [{lo:.6}, {hi:.6}]"
    )]
    NoMomentSolution { target: f64, lo: f64, hi: f64 },

    /// Iterative routine stopped before meeting its tolerance. `value` is the
    /// best estimate available at that point.
    #[error("{what} did not converge (best value {value:e}, error estimate {error:e})")]
    Convergence {
        what: &'static str,
        value: f64,
        error: f64,
    },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("invalid grouped data: {0}")]
    InvalidGroups(String),

    #[error("invalid configuration field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from reading or writing files rather than
    /// from the data or the estimators.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Parse { .. } | Error::Input { .. }
        )
    }
}
