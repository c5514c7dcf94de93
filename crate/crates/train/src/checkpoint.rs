//! Training checkpoints: an `LNCK` file whose header carries the model
//! and training configuration plus the number of completed steps.
//!
//! Header keys:
//!
//! ```text
//! format_version=1
//! model.down_blocks, model.base_filters, model.comp_blocks, model.leaky_slope
//! train.*            every TrainConfig field
//! progress.step      optimizer steps completed
//! ```

use std::path::Path;

use latnet_autodiff::Checkpoint;
use latnet_lbm::keyvalue::KeyValues;
use latnet_model::{Model, ModelConfig};

use crate::config::TrainConfig;
use crate::error::{Result, TrainError};

pub const HEADER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainCheckpoint {
    pub model: Model<f32>,
    pub config: TrainConfig,
    pub step: u64,
}

impl TrainCheckpoint {
    pub fn header(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("format_version", HEADER_VERSION);
        self.model.config().write_keys(&mut kv);
        self.config.write_keys(&mut kv);
        kv.push("progress.step", self.step);
        kv
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            header: self.header().to_text(),
            params: self.model.params.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let kv = KeyValues::parse(&ck.header)?;
        kv.check_version(HEADER_VERSION)?;
        let model_cfg = ModelConfig::read_keys(&kv)?;
        let mut config = TrainConfig::default();
        config.update_from(&kv)?;
        Ok(TrainCheckpoint {
            model: Model::with_params(model_cfg, ck.params)?,
            config,
            step: kv.require("progress.step")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path).map_err(|e| match e {
            latnet_autodiff::TensorError::Io(io) => TrainError::io(path, io),
            other => other.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path).map_err(|e| match e {
            latnet_autodiff::TensorError::Io(io) => TrainError::io(path, io),
            other => other.into(),
        })?;
        Self::from_checkpoint(ck)
    }
}
