use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("innovation covariance is numerically singular")]
    SingularCovariance,

    #[error("degenerate correspondences: {0}")]
    DegenerateInput(String),

    #[error("invalid affine transform: {0}")]
    InvalidTransform(String),

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cost matrix shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("frame index {got} does not follow previous frame {prev}")]
    NonMonotonicFrame { prev: u32, got: u32 },

    #[error("missing embedding for frame {frame}, detection {index}")]
    MissingEmbedding { frame: u32, index: usize },

    #[error("embedding table required when with_reid is enabled")]
    EmbeddingsRequired,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("MOTA is undefined when the ground-truth count is zero")]
    UndefinedMota,

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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
