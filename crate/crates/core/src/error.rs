use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed record: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error("unsupported format_version {found} in {what} (expected {expected})")]
    FormatVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("graph {graph_id}: edge endpoint out of range ({src} -> {dst}, {nodes} nodes)")]
    EdgeOutOfRange {
        graph_id: String,
        src: usize,
        dst: usize,
        nodes: usize,
    },

    #[error("duplicate design_id {0}")]
    DuplicateDesignId(String),

    #[error("duplicate graph_id {0}")]
    DuplicateGraphId(String),

    #[error("dataset too small to split ({0} designs, need at least 10)")]
    TooSmallToSplit(usize),

    #[error("cannot batch an empty list of graphs")]
    EmptyBatch,

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("code embedding required but missing for design {0}")]
    MissingEmbedding(String),

    #[error("unknown design_id {0} in embedding table")]
    UnknownDesign(String),

    #[error("bad magic in embedding file {0}")]
    BadMagic(PathBuf),

    #[error("truncated embedding payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("non-finite embedding for design {0}")]
    NonFiniteEmbedding(String),

    #[error("PNA degree scale (delta_scale) is unset")]
    PnaStatsUnset,

    #[error("non-finite loss at epoch {epoch}, batch {batch} (designs: {designs})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        designs: String,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
