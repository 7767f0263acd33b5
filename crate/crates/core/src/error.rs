use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}: file contains no data")]
    EmptyInput(PathBuf),

    #[error("node id {id} out of range for a graph with {n} nodes")]
    NodeOutOfRange { id: u64, n: usize },

    #[error("cue set is empty")]
    EmptyCueSet,

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate population at generation {generation}: all samples equal")]
    DegeneratePopulation { generation: usize },

    #[error("memory guard: {directed_edges} directed edges exceeds cap {cap}")]
    TooLarge { directed_edges: u64, cap: u64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
