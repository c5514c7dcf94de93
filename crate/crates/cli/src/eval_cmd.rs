use std::fs;
use std::path::PathBuf;

use latnet_lbm::dataset::load_dataset;
use latnet_train::{evaluate, self_evaluate, TrainCheckpoint};

use crate::failure::{CliResult, Failure};
use crate::settings::Settings;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Trained model; omit together with --self-check to score the dataset
    /// against itself.
    #[arg(long, required_unless_present = "self_check")]
    checkpoint: Option<PathBuf>,
    /// Test dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Rollout steps to score.
    #[arg(long)]
    horizon: Option<usize>,
    /// Directory for `eval_runs.csv` and `eval_aggregate.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Compare the solver frames with themselves.
    #[arg(long, conflicts_with = "checkpoint")]
    self_check: bool,
}

pub fn run(a: Args, s: &Settings) -> CliResult<()> {
    let ds = load_dataset(&a.data)?;
    let horizon = s.pick(a.horizon, "horizon", 32)?;
    let report = match &a.checkpoint {
        Some(path) => evaluate(&TrainCheckpoint::load(path)?.model, &ds, horizon)?,
        None => self_evaluate(&ds, horizon)?,
    };
    fs::create_dir_all(&a.out).map_err(|e| Failure::user(format!("{}: {e}", a.out.display())))?;
    for (name, text) in [
        ("eval_runs.csv", report.runs_csv()),
        ("eval_aggregate.csv", report.aggregate_csv()),
    ] {
        let path = a.out.join(name);
        fs::write(&path, text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    }
    let failures: Vec<String> = report
        .runs
        .iter()
        .filter_map(|r| r.failure_step.map(|t| format!("run {} at step {t}", r.run)))
        .collect();
    if let Some(last) = report.mean.last() {
        println!(
            "runs={} horizon={horizon} final_mse_mean={:e} final_div_generated={:e} final_div_true={:e}",
            report.runs.len(),
            last.mse,
            last.div_generated,
            last.div_true
        );
    }
    if !failures.is_empty() {
        return Err(Failure::Numeric(format!(
            "rollouts went non-finite: {}; partial reports written",
            failures.join(", ")
        )));
    }
    Ok(())
}
