use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("diverged at round {round}{}", node_detail(*.node, *.step))]
    Diverged {
        round: usize,
        node: Option<usize>,
        step: Option<usize>,
    },

    #[error("line search failed after {halvings} halvings")]
    LineSearch { halvings: usize },

    #[error("iteration cap reached after {evaluations} gradient evaluations (gradient norm {grad_norm:e})")]
    IterationCap { evaluations: usize, grad_norm: f64 },

    #[error("no metrics to plot")]
    EmptyMetrics,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

fn node_detail(node: Option<usize>, step: Option<usize>) -> String {
    match (node, step) {
        (Some(k), Some(t)) => format!(" (node {k}, step {t})"),
        (Some(k), None) => format!(" (node {k})"),
        _ => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
