use std::path::PathBuf;

use crate::linsolve::SolveStats;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values, grid needs {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("non-finite value {value} at node ({i}, {j})")]
    NonFinite { i: usize, j: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("{what}: phi = {phi} lies outside the open interval ({lo}, {hi})")]
    Domain {
        what: &'static str,
        phi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("node ({i}, {j}) has phi = {value}, outside the admissible band ({lo}, {hi})")]
    OutOfBand {
        i: usize,
        j: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("linear solver did not converge: {stats}")]
    NotConverged { stats: SolveStats },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("L2 norm grew during a step: {before:.17e} -> {after:.17e}")]
    StabilityViolated { before: f64, after: f64 },

    #[error("invalid step control: {0}")]
    InvalidControl(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
