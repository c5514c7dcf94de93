use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LbmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LbmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("simulation unstable at cell ({x}, {y}), direction {dir}: f = {value}")]
    Instability {
        x: usize,
        y: usize,
        dir: usize,
        value: f64,
    },

    #[error("mask has no solid cells; drag is undefined")]
    EmptyBoundary,

    #[error("mask has no fluid cells")]
    EmptyDomain,

    #[error("could not place object {index} after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("{unstable} of {requested} runs were unstable; solver configuration is unusable")]
    Distribution { unstable: usize, requested: usize },

    #[error("malformed file at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LbmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LbmError::Io {
            path: path.into(),
            source,
        }
    }
}
