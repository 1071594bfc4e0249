use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value for {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("box extent {axis} must be strictly positive and finite, got {value}")]
    InvalidExtent { axis: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("innovation covariance is singular; check measurement/process noise settings")]
    SingularInnovation,

    #[error("frame index {got} presented after frame {last}; frames must be strictly increasing")]
    FrameOrder { last: u64, got: u64 },

    #[error("prediction and ground-truth clips are not frame-aligned: {0}")]
    FrameMismatch(String),

    #[error("latency summary needs at least one sample")]
    EmptySamples,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("clip {path} is missing frame {index:06}")]
    MissingFrame { path: PathBuf, index: u64 },

    #[error("clip {0} contains no frame files")]
    EmptyClip(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
