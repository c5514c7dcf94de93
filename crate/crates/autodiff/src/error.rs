use thiserror::Error;

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value produced by {op}")]
    Numeric { op: &'static str },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("malformed checkpoint at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
