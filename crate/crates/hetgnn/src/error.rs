use std::path::PathBuf;

/// Errors produced by graph construction, loaders and numeric kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid node id {node} (graph has {num_nodes} nodes)")]
    InvalidNode { node: usize, num_nodes: usize },

    #[error("homophily undefined: node {0} has no neighbors in range")]
    UndefinedHomophily(usize),

    #[error("all nodes are isolated; graph-level homophily undefined")]
    AllIsolated,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("load error in {file}:{line}: {msg}")]
    Load {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("empty split: {0}")]
    EmptySplit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
