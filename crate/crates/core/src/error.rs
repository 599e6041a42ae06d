use std::path::PathBuf;

use crate::continuation::Branch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Iterate and bookkeeping left behind by a Newton solve that did not converge.
#[derive(Debug, Clone)]
pub struct NoConvergence {
    pub lambda: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub last_iterate: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mesh needs at least 16 intervals, got {0}")]
    Size(usize),

    #[error("singular nonlinearity at node {index}: 1 - u = {gap:e}")]
    Singularity { index: usize, gap: f64 },

    #[error("zero pivot at row {row} (|pivot| = {pivot:e})")]
    Pivot { row: usize, pivot: f64 },

    #[error(
        "Newton did not converge at lambda = {} after {} iterations (residual {:e})",
        .0.lambda, .0.iterations, .0.residual_norm
    )]
    NoConvergence(Box<NoConvergence>),

    #[error("invalid bracket: {0}")]
    Bracket(String),

    #[error("continuation stalled after {} points: step size underflow", .0.points.len())]
    Stall(Box<Branch>),

    #[error("no second solution found: {0}")]
    NotFound(String),

    #[error("boundary normal {index} has norm {norm}, expected 1")]
    Normalization { index: usize, norm: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid value for `{key}`: {msg}")]
    Range { key: String, msg: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures that are numerical rather than user errors.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singularity { .. }
                | Error::Pivot { .. }
                | Error::NoConvergence(_)
                | Error::Stall(_)
                | Error::NotFound(_)
                | Error::Bracket(_)
        )
    }
}
