use latnet_autodiff::Adam;
use latnet_lbm::keyvalue::KeyValues;

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Latent steps compared against the solver per sample.
    pub unroll_steps: usize,
    pub lambda_gdl: f64,
    pub adam: Adam,
    pub batch_size: usize,
    pub max_steps: u64,
    pub seed: u64,
    /// Steps between progress log lines.
    pub eval_interval: u64,
    /// Steps between checkpoint writes; 0 keeps only the final one.
    pub checkpoint_interval: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            unroll_steps: 5,
            lambda_gdl: 0.2,
            adam: Adam::default(),
            batch_size: 4,
            max_steps: 500,
            seed: 0,
            eval_interval: 50,
            checkpoint_interval: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unroll_steps == 0 {
            return Err(TrainError::Config("unroll_steps must be at least 1".into()));
        }
        if !(self.lambda_gdl >= 0.0 && self.lambda_gdl.is_finite()) {
            return Err(TrainError::Config(format!("lambda_gdl must be >= 0, got {}", self.lambda_gdl)));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        let a = &self.adam;
        let ok = a.lr > 0.0
            && a.lr.is_finite()
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.eps > 0.0;
        if !ok {
            return Err(TrainError::Config(format!("bad Adam settings {a:?}")));
        }
        Ok(())
    }

    pub fn write_keys(&self, kv: &mut KeyValues) {
        kv.push("train.unroll_steps", self.unroll_steps)
            .push("train.lambda_gdl", self.lambda_gdl)
            .push("train.lr", self.adam.lr)
            .push("train.beta1", self.adam.beta1)
            .push("train.beta2", self.adam.beta2)
            .push("train.eps", self.adam.eps)
            .push("train.batch_size", self.batch_size)
            .push("train.max_steps", self.max_steps)
            .push("train.seed", self.seed)
            .push("train.eval_interval", self.eval_interval)
            .push("train.checkpoint_interval", self.checkpoint_interval);
    }

    /// Reads `train.*` keys, keeping the current value for absent ones.
    pub fn update_from(&mut self, kv: &KeyValues) -> Result<()> {
        macro_rules! take {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.optional($key)? {
                    $field = v;
                }
            };
        }
        take!("train.unroll_steps", self.unroll_steps);
        take!("train.lambda_gdl", self.lambda_gdl);
        take!("train.lr", self.adam.lr);
        take!("train.beta1", self.adam.beta1);
        take!("train.beta2", self.adam.beta2);
        take!("train.eps", self.adam.eps);
        take!("train.batch_size", self.batch_size);
        take!("train.max_steps", self.max_steps);
        take!("train.seed", self.seed);
        take!("train.eval_interval", self.eval_interval);
        take!("train.checkpoint_interval", self.checkpoint_interval);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        let mut cfg = TrainConfig {
            lambda_gdl: 0.0,
            max_steps: 7,
            ..Default::default()
        };
        cfg.adam.lr = 3e-4;
        let mut kv = KeyValues::new();
        cfg.write_keys(&mut kv);
        let mut back = TrainConfig::default();
        back.update_from(&KeyValues::parse(&kv.to_text()).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            TrainConfig { unroll_steps: 0, ..Default::default() },
            TrainConfig { lambda_gdl: -1.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
