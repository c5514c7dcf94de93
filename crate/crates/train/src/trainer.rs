use std::collections::VecDeque;
use std::time::Instant;

use latnet_autodiff::Graph;
use latnet_lbm::dataset::Dataset;
use latnet_model::Model;

use crate::config::TrainConfig;
use crate::data::{windows, Batch, Sampler};
use crate::error::{Result, TrainError};
use crate::loss::unrolled_loss;

/// Losses of one optimizer step, measured before the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub step: u64,
    pub total: f64,
    pub mse: f64,
    pub gdl: f64,
    /// Seconds since this call to [`train`] started.
    pub wall_seconds: f64,
}

pub const HISTORY_HEADER: &str = "step,total_loss,mse,gdl,wall_seconds";

impl HistoryRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:.3}",
            self.step, self.total, self.mse, self.gdl, self.wall_seconds
        )
    }
}

/// Rejects a loss above 100x the mean of the previous ten.
#[derive(Debug, Clone, Default)]
pub struct DivergenceGuard {
    recent: VecDeque<f64>,
}

impl DivergenceGuard {
    const WINDOW: usize = 10;
    const FACTOR: f64 = 100.0;

    pub fn check(&mut self, step: u64, loss: f64) -> Result<()> {
        if self.recent.len() == Self::WINDOW {
            let average = self.recent.iter().sum::<f64>() / Self::WINDOW as f64;
            if loss > Self::FACTOR * average {
                return Err(TrainError::Diverged { step, loss, average });
            }
            self.recent.pop_front();
        }
        self.recent.push_back(loss);
        Ok(())
    }
}

/// Runs optimizer steps `start_step .. cfg.max_steps` on `model`.
///
/// `after_step` sees the updated model and the record of every step; an
/// error from it stops training. On divergence the model keeps the
/// parameters from before the offending step.
pub fn train(
    model: &mut Model<f32>,
    ds: &Dataset,
    cfg: &TrainConfig,
    start_step: u64,
    mut after_step: impl FnMut(&Model<f32>, &HistoryRecord) -> Result<()>,
) -> Result<Vec<HistoryRecord>> {
    cfg.validate()?;
    let mut history = Vec::new();
    if start_step >= cfg.max_steps {
        return Ok(history);
    }
    let mut sampler = Sampler::new(windows(ds, cfg.unroll_steps)?, cfg.seed);
    let mut guard = DivergenceGuard::default();
    let clock = Instant::now();
    for step in start_step..cfg.max_steps {
        let batch = Batch::<f32>::gather(ds, &sampler.batch(step, cfg.batch_size), cfg.unroll_steps)?;
        let mut g = Graph::new();
        let terms = unrolled_loss(model, &mut g, &batch, cfg.lambda_gdl).map_err(|e| match e {
            TrainError::Model(m) if is_numeric_model(&m) => TrainError::NonFinite { step },
            TrainError::Tensor(latnet_autodiff::TensorError::Numeric { .. }) => TrainError::NonFinite { step },
            other => other,
        })?;
        let total = g.value(terms.total).item() as f64;
        if !total.is_finite() {
            return Err(TrainError::NonFinite { step });
        }
        guard.check(step, total)?;

        let grads = g.backward(terms.total)?.for_params(&model.params);
        cfg.adam.step(&mut model.params, &grads)?;
        let rec = HistoryRecord {
            step,
            total,
            mse: g.value(terms.mse).item() as f64,
            gdl: g.value(terms.gdl).item() as f64,
            wall_seconds: clock.elapsed().as_secs_f64(),
        };
        if cfg.eval_interval > 0 && (step + 1) % cfg.eval_interval == 0 {
            log::info!(
                "step {} loss {:.4e} (mse {:.4e}, gdl {:.4e}) {:.1}s",
                step,
                rec.total,
                rec.mse,
                rec.gdl,
                rec.wall_seconds
            );
        }
        history.push(rec);
        after_step(model, &rec)?;
    }
    Ok(history)
}

fn is_numeric_model(e: &latnet_model::ModelError) -> bool {
    matches!(
        e,
        latnet_model::ModelError::Tensor(latnet_autodiff::TensorError::Numeric { .. })
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_needs_a_full_window() {
        let mut g = DivergenceGuard::default();
        g.check(0, 1.0).unwrap();
        // Nine samples are not enough to judge.
        for s in 1..10 {
            g.check(s, if s == 9 { 1e6 } else { 1.0 }).unwrap();
        }
        let mut g = DivergenceGuard::default();
        for s in 0..10 {
            g.check(s, 1.0).unwrap();
        }
        g.check(10, 99.0).unwrap();
        match g.check(11, 2000.0) {
            Err(TrainError::Diverged { step: 11, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
