use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("node {0} is unlabeled")]
    Unlabeled(usize),

    #[error("label {label} of node {node} is not below class count {classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        classes: usize,
    },

    #[error("point is not strictly inside the Poincaré ball (c·|x|² = {0})")]
    OutsideBall(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node {0} is isolated")]
    IsolatedNode(usize),

    #[error("ground distance between {0} and {1} is infinite")]
    InfiniteGroundDistance(usize, usize),

    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),

    #[error("curvature table is missing edge ({0}, {1})")]
    MissingEdge(usize, usize),

    #[error("graph has no node features")]
    MissingFeatures,

    #[error("missing Poincaré norm for node {0}")]
    MissingNorm(usize),

    #[error("training mask is empty")]
    EmptyTrainMask,

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("class {class} has {available} nodes but {required} are required")]
    ClassTooSmall {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("hierarchy band {0} selects no nodes")]
    EmptyBand(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generated graph would have {0} nodes, above the 1e6 limit")]
    TooLarge(u64),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
