use latnet_autodiff::TensorError;
use latnet_lbm::LbmError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Lbm(#[from] LbmError),
    #[error("grid {nx}x{ny} is not divisible by {multiple}; both dimensions must be multiples of {multiple}")]
    Indivisible { nx: usize, ny: usize, multiple: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("rollout went non-finite at step {step}: {source}")]
    Diverged { step: usize, source: TensorError },
    #[error("region {region:?} outside {h}x{w} output")]
    Region {
        region: latnet_autodiff::Rect,
        h: usize,
        w: usize,
    },
}
