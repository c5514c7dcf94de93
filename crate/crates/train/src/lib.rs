//! Unrolled training of the surrogate against solver trajectories, its
//! checkpoints, and rollout evaluation.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod loss;
pub mod trainer;

pub use checkpoint::TrainCheckpoint;
pub use config::TrainConfig;
pub use data::{windows, Batch, Sampler, Window};
pub use error::{Result, TrainError};
pub use eval::{evaluate, self_evaluate, RolloutReport, RunReport, StepMetrics};
pub use loss::{predicted_loss, unrolled_loss, LossTerms};
pub use trainer::{train, DivergenceGuard, HistoryRecord, HISTORY_HEADER};
