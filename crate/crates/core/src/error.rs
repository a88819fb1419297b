use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {n_theta}x{n_phi} is below the minimum 4x3")]
    GridTooSmall { n_theta: usize, n_phi: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error(
        "one-form is rank deficient at row {row}, col {col} (det = {det:e}){}",
        step.map(|s| format!(" in time step {s}")).unwrap_or_default()
    )]
    RankDeficient {
        row: usize,
        col: usize,
        det: f64,
        step: Option<usize>,
    },

    #[error("degenerate normal at row {row}, col {col}")]
    DegenerateNormal { row: usize, col: usize },

    #[error("cannot project a vanishing vector onto the sphere at row {row}, col {col}")]
    ZeroVector { row: usize, col: usize },

    #[error("step t = {t} is not certified (bound {bound})")]
    StepBound { t: f64, bound: f64 },

    #[error("index {index} outside {min}..={max}")]
    Index { index: usize, min: usize, max: usize },

    #[error("parse error in `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("surface invariant violated ({what}) at row {row}, col {col}: {detail}")]
    Invariant {
        what: &'static str,
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("unknown shape kind `{0}`")]
    UnknownShape(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags a rank-deficiency error with the time step it occurred in.
    pub fn at_step(self, index: usize) -> Self {
        match self {
            Error::RankDeficient { row, col, det, .. } => Error::RankDeficient {
                row,
                col,
                det,
                step: Some(index),
            },
            other => other,
        }
    }
}
