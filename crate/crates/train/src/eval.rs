//! Rollout evaluation against solver trajectories.

use latnet_lbm::dataset::Dataset;
use latnet_lbm::{drag, flux_average, macroscopics, mean_abs_divergence, BoundaryMask, BoundaryMode, LatticeState};
use latnet_model::convert::{mask_tensor, state_tensor, tensor_state};
use latnet_model::{Model, ModelError};

use crate::error::{Result, TrainError};

/// Metrics of one predicted frame against the matching solver frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepMetrics {
    pub mse: f64,
    pub div_generated: f64,
    pub div_true: f64,
    pub drag_generated: [f64; 2],
    pub drag_true: [f64; 2],
    pub flux_generated: [f64; 2],
    pub flux_true: [f64; 2],
}

pub const METRIC_COLUMNS: [&str; 11] = [
    "mse",
    "div_generated",
    "div_true",
    "drag_generated_x",
    "drag_generated_y",
    "drag_true_x",
    "drag_true_y",
    "flux_generated_x",
    "flux_generated_y",
    "flux_true_x",
    "flux_true_y",
];

impl StepMetrics {
    pub fn values(&self) -> [f64; 11] {
        [
            self.mse,
            self.div_generated,
            self.div_true,
            self.drag_generated[0],
            self.drag_generated[1],
            self.drag_true[0],
            self.drag_true[1],
            self.flux_generated[0],
            self.flux_generated[1],
            self.flux_true[0],
            self.flux_true[1],
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        StepMetrics {
            mse: v[0],
            div_generated: v[1],
            div_true: v[2],
            drag_generated: [v[3], v[4]],
            drag_true: [v[5], v[6]],
            flux_generated: [v[7], v[8]],
            flux_true: [v[9], v[10]],
        }
    }

    fn failed() -> Self {
        Self::from_values([f64::NAN; 11])
    }

    /// Compares a predicted state with the solver's. Drag is evaluated on
    /// the stored (post-streaming) frames for both, so the two series are
    /// measured the same way.
    pub fn compare(pred: &LatticeState, truth: &LatticeState, mask: &BoundaryMask, mode: BoundaryMode) -> Result<Self> {
        let n = truth.f.len() as f64;
        let mse = pred.f.iter().zip(&truth.f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        Ok(StepMetrics {
            mse,
            div_generated: mean_abs_divergence(&macroscopics(pred), mask)?,
            div_true: mean_abs_divergence(&macroscopics(truth), mask)?,
            drag_generated: drag(pred, mask, mode)?,
            drag_true: drag(truth, mask, mode)?,
            flux_generated: flux_average(pred, mask)?,
            flux_true: flux_average(truth, mask)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run: usize,
    /// Entry `k` compares rollout step `k + 1` with frame `k + 1`.
    pub steps: Vec<StepMetrics>,
    /// First rollout step that went non-finite; later entries are NaN.
    pub failure_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutReport {
    pub horizon: usize,
    pub runs: Vec<RunReport>,
    pub mean: Vec<StepMetrics>,
    /// Population standard deviation across runs.
    pub std: Vec<StepMetrics>,
}

impl RolloutReport {
    pub fn from_runs(horizon: usize, runs: Vec<RunReport>) -> Self {
        let mut mean = Vec::with_capacity(horizon);
        let mut std = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut m = [0.0; 11];
            let mut s = [0.0; 11];
            let n = runs.len().max(1) as f64;
            for r in &runs {
                for (acc, v) in m.iter_mut().zip(r.steps[t].values()) {
                    *acc += v / n;
                }
            }
            for r in &runs {
                for ((acc, v), mu) in s.iter_mut().zip(r.steps[t].values()).zip(m) {
                    *acc += (v - mu) * (v - mu) / n;
                }
            }
            mean.push(StepMetrics::from_values(m));
            std.push(StepMetrics::from_values(s.map(f64::sqrt)));
        }
        RolloutReport {
            horizon,
            runs,
            mean,
            std,
        }
    }

    /// One row per (run, step).
    pub fn runs_csv(&self) -> String {
        let mut out = format!("run,step,{}\n", METRIC_COLUMNS.join(","));
        for r in &self.runs {
            for (k, m) in r.steps.iter().enumerate() {
                let vals: Vec<String> = m.values().iter().map(|v| format!("{v:e}")).collect();
                out.push_str(&format!("{},{},{}\n", r.run, k + 1, vals.join(",")));
            }
        }
        out
    }

    /// One row per step with `<metric>_mean` and `<metric>_std` columns.
    pub fn aggregate_csv(&self) -> String {
        let cols: Vec<String> = METRIC_COLUMNS
            .iter()
            .flat_map(|c| [format!("{c}_mean"), format!("{c}_std")])
            .collect();
        let mut out = format!("step,{}\n", cols.join(","));
        for t in 0..self.horizon {
            let vals: Vec<String> = self.mean[t]
                .values()
                .iter()
                .zip(self.std[t].values())
                .flat_map(|(m, s)| [format!("{m:e}"), format!("{s:e}")])
                .collect();
            out.push_str(&format!("{},{}\n", t + 1, vals.join(",")));
        }
        out
    }
}

pub fn check_horizon(ds: &Dataset, horizon: usize) -> Result<()> {
    let available = ds.runs.iter().map(|r| r.frames.len()).min().unwrap_or(0).saturating_sub(1);
    if horizon > available {
        return Err(TrainError::Horizon { horizon, available });
    }
    Ok(())
}

/// Rolls the model out from frame 0 of one run and scores `horizon` steps.
pub fn evaluate_run(model: &Model<f32>, ds: &Dataset, run: usize, horizon: usize) -> Result<RunReport> {
    let rec = &ds.runs[run];
    let mode = ds.config.solver.boundary_mode;
    let (mul, add) = model.gates(&mask_tensor(&rec.mask))?;
    let mut state = model.encode_tensor(&state_tensor(&rec.frames[0]))?;
    let mut steps = Vec::with_capacity(horizon);
    let mut failure_step = None;
    for t in 1..=horizon {
        if failure_step.is_none() {
            let next = model
                .step_tensor(&state, &mul, &add)
                .and_then(|s| model.decode_tensor(&s).map(|f| (s, f)));
            match next {
                Ok((s, f)) => {
                    state = s;
                    let pred = tensor_state(&f, 0)?;
                    steps.push(StepMetrics::compare(&pred, &rec.frames[t], &rec.mask, mode)?);
                    continue;
                }
                Err(ModelError::Tensor(latnet_autodiff::TensorError::Numeric { .. })) => {
                    log::warn!("run {run}: rollout went non-finite at step {t}");
                    failure_step = Some(t);
                }
                Err(e) => return Err(e.into()),
            }
        }
        steps.push(StepMetrics::failed());
    }
    Ok(RunReport {
        run,
        steps,
        failure_step,
    })
}

pub fn evaluate(model: &Model<f32>, ds: &Dataset, horizon: usize) -> Result<RolloutReport> {
    check_horizon(ds, horizon)?;
    let runs = (0..ds.runs.len())
        .map(|r| evaluate_run(model, ds, r, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(RolloutReport::from_runs(horizon, runs))
}

/// Scores the dataset against itself: every error series is zero.
pub fn self_evaluate(ds: &Dataset, horizon: usize) -> Result<RolloutReport> {
    check_horizon(ds, horizon)?;
    let mode = ds.config.solver.boundary_mode;
    let runs = ds
        .runs
        .iter()
        .enumerate()
        .map(|(run, rec)| {
            let steps = (1..=horizon)
                .map(|t| StepMetrics::compare(&rec.frames[t], &rec.frames[t], &rec.mask, mode))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunReport {
                run,
                steps,
                failure_step: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RolloutReport::from_runs(horizon, runs))
}
