use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("backward requires a 1x1 loss, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("parameter {0} has no gradient")]
    MissingGradient(String),

    #[error("duplicate parameter name {0}")]
    DuplicateParam(String),

    #[error("unknown parameter {0}")]
    UnknownParam(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot choose {requested} sources from a pool of {available}")]
    SourcePool { requested: usize, available: usize },

    #[error("cascade has {infections} non-source infections, fewer than {parts} snapshot groups")]
    CascadeTooSmall { infections: usize, parts: usize },

    #[error("collected {collected} of {wanted} valid cascades after {attempts} attempts")]
    RetryBudget {
        collected: usize,
        wanted: usize,
        attempts: usize,
    },

    #[error("non-finite loss at epoch {epoch}, block {block}")]
    TrainingDiverged { epoch: usize, block: usize },

    #[error("non-finite inference loss at refinement epoch {epoch}")]
    InferenceDiverged { epoch: usize },

    #[error("match index is empty")]
    EmptyIndex,

    #[error("block {0} holds no source vectors")]
    EmptyBlock(usize),

    #[error("cost matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },

    #[error("top-k size {k} exceeds node count {n}")]
    TopKTooLarge { k: usize, n: usize },

    #[error("only {available} infected nodes, need {k}")]
    TooFewInfected { k: usize, available: usize },

    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("manifest hash mismatch: {0}")]
    ManifestMismatch(String),

    #[error("checkpoint does not fit graph: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unsupported format version {0}")]
    Version(u32),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
