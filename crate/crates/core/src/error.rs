use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conflicting signs on edge ({src}, {dst})")]
    SignConflict { src: String, dst: String },

    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("too few edges: {0}")]
    TooFewEdges(String),

    #[error("no negative edges in training set")]
    NoNegativeEdges,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix dimension {n} exceeds dense eigensolver cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("need at least two nodes for contrastive loss, got {0}")]
    TooFewNodes(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("AUC needs both classes present")]
    SingleClass,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
