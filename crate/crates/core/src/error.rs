use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HmtmError>;

#[derive(Debug, Error)]
pub enum HmtmError {
    #[error("index out of range: ({i}, {j}, {t}) for a {n_nodes}-node, {n_layers}-layer tensor")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        t: usize,
        n_nodes: usize,
        n_layers: usize,
    },

    #[error("conflicting duplicate entry for dyad ({i}, {j}) in layer {t}: {first} vs {second}")]
    ConflictingDuplicate {
        i: usize,
        j: usize,
        t: usize,
        first: f64,
        second: f64,
    },

    #[error("self-loop entry ({i}, {i}) in layer {t}")]
    SelfLoop { i: usize, t: usize },

    #[error("non-finite value at ({i}, {j}, {t})")]
    NonFinite { i: usize, j: usize, t: usize },

    #[error("layer {t} is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize, t: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate layer {t}: total edge weight is zero")]
    DegenerateLayer { t: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid block schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular posterior covariance for regime {regime} ({context})")]
    SingularPosterior { regime: usize, context: String },

    #[error("forward filter lost all probability mass at layer {layer}")]
    FilterUnderflow { layer: usize },

    #[error("insufficient dwell count for prior a0 in regime {regime}: Beta shape {shape}")]
    InsufficientDwell { regime: usize, shape: f64 },

    #[error("invalid regime path: {0}")]
    InvalidPath(String),

    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },

    #[error("k = {k} exceeds the number of distinct rows ({distinct})")]
    TooFewDistinctRows { k: usize, distinct: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl HmtmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HmtmError::Io {
            path: path.into(),
            source,
        }
    }
}
