use latnet_lbm::keyvalue::KeyValues;

use crate::error::{ModelError, Result};

/// Channels of a D2Q9 distribution field.
pub const FLOW_CHANNELS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Number of stride-2 stages; the latent grid is `2^down_blocks`
    /// times coarser than the input.
    pub down_blocks: usize,
    pub base_filters: usize,
    /// Residual blocks in one latent time step.
    pub comp_blocks: usize,
    /// Negative-side slope of the leaky rectifier.
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            down_blocks: 2,
            base_filters: 16,
            comp_blocks: 3,
            leaky_slope: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn latent_channels(&self) -> usize {
        self.base_filters << self.down_blocks
    }

    /// Spatial compression factor, also the required multiple of grid dims.
    pub fn factor(&self) -> usize {
        1 << self.down_blocks
    }

    pub fn validate(&self) -> Result<()> {
        if self.down_blocks == 0 || self.down_blocks > 8 {
            return Err(ModelError::Config(format!(
                "down_blocks must be in 1..=8, got {}",
                self.down_blocks
            )));
        }
        if self.base_filters == 0 {
            return Err(ModelError::Config("base_filters must be positive".into()));
        }
        if !(self.leaky_slope.is_finite() && (0.0..1.0).contains(&self.leaky_slope)) {
            return Err(ModelError::Config(format!(
                "leaky_slope must be in [0, 1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    pub fn check_grid(&self, nx: usize, ny: usize) -> Result<()> {
        let m = self.factor();
        if nx == 0 || ny == 0 || nx % m != 0 || ny % m != 0 {
            return Err(ModelError::Indivisible { nx, ny, multiple: m });
        }
        Ok(())
    }

    pub fn latent_dims(&self, nx: usize, ny: usize) -> Result<(usize, usize, usize)> {
        self.check_grid(nx, ny)?;
        Ok((nx / self.factor(), ny / self.factor(), self.latent_channels()))
    }

    /// Appends `model.*` keys.
    pub fn write_keys(&self, kv: &mut KeyValues) {
        kv.push("model.down_blocks", self.down_blocks)
            .push("model.base_filters", self.base_filters)
            .push("model.comp_blocks", self.comp_blocks)
            .push("model.leaky_slope", self.leaky_slope);
    }

    pub fn read_keys(kv: &KeyValues) -> Result<Self> {
        let cfg = ModelConfig {
            down_blocks: kv.require("model.down_blocks")?,
            base_filters: kv.require("model.base_filters")?,
            comp_blocks: kv.require("model.comp_blocks")?,
            leaky_slope: kv.require("model.leaky_slope")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
