use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pnm format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("rect {rect} exceeds {width}x{height} image")]
    Bounds {
        rect: String,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate template: zero variance")]
    DegenerateTemplate,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cascade load error at {path}: {message}")]
    CascadeLoad { path: String, message: String },

    #[error("training error: {0}")]
    Training(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("model load error: {0}")]
    ModelLoad(String),

    #[error("sequencing error: timestamp {current} does not follow {previous}")]
    Sequencing { previous: f64, current: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("frame {index}: {message}")]
    Frame { index: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
