use std::path::PathBuf;

use latnet_autodiff::TensorError;
use latnet_lbm::LbmError;
use latnet_model::ModelError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Lbm(#[from] LbmError),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("no training windows: runs need at least {needed} frames, longest has {longest}")]
    NoWindows { needed: usize, longest: usize },
    #[error("horizon {horizon} exceeds the {available} steps available after frame 0")]
    Horizon { horizon: usize, available: usize },
    #[error("loss became non-finite at step {step}")]
    NonFinite { step: u64 },
    #[error("loss {loss:.4e} at step {step} exceeds 100x the recent average {average:.4e}; training aborted")]
    Diverged { step: u64, loss: f64, average: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TrainError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numbers rather than by inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            TrainError::NonFinite { .. } | TrainError::Diverged { .. } => true,
            TrainError::Tensor(TensorError::Numeric { .. }) => true,
            TrainError::Model(ModelError::Diverged { .. }) => true,
            TrainError::Model(ModelError::Tensor(TensorError::Numeric { .. })) => true,
            TrainError::Lbm(LbmError::Instability { .. } | LbmError::Distribution { .. }) => true,
            _ => false,
        }
    }
}
