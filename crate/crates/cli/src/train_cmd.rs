use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;

use latnet_autodiff::Adam;
use latnet_lbm::dataset::load_dataset;
use latnet_model::{Model, ModelConfig};
use latnet_train::{train, TrainCheckpoint, TrainConfig, TrainError, HISTORY_HEADER};

use crate::failure::{CliResult, Failure};
use crate::settings::Settings;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset directory written by `generate`.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for `checkpoint.lnck` and `loss.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Continue from this checkpoint; step numbering carries on.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    down_blocks: Option<usize>,
    #[arg(long)]
    base_filters: Option<usize>,
    #[arg(long)]
    comp_blocks: Option<usize>,
    #[arg(long)]
    leaky_slope: Option<f64>,
    #[arg(long)]
    unroll_steps: Option<usize>,
    #[arg(long)]
    lambda_gdl: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Total optimizer steps, counting those of a resumed checkpoint.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Steps between progress lines.
    #[arg(long)]
    eval_interval: Option<u64>,
    /// Steps between checkpoint writes (0: final only).
    #[arg(long)]
    checkpoint_interval: Option<u64>,
}

fn train_config(a: &Args, s: &Settings, base: TrainConfig) -> CliResult<TrainConfig> {
    Ok(TrainConfig {
        unroll_steps: s.pick(a.unroll_steps, "unroll-steps", base.unroll_steps)?,
        lambda_gdl: s.pick(a.lambda_gdl, "lambda-gdl", base.lambda_gdl)?,
        adam: Adam {
            lr: s.pick(a.lr, "lr", base.adam.lr)?,
            beta1: s.pick(a.beta1, "beta1", base.adam.beta1)?,
            beta2: s.pick(a.beta2, "beta2", base.adam.beta2)?,
            eps: s.pick(a.eps, "eps", base.adam.eps)?,
        },
        batch_size: s.pick(a.batch_size, "batch-size", base.batch_size)?,
        max_steps: s.pick(a.max_steps, "max-steps", base.max_steps)?,
        seed: s.pick(a.seed, "seed", base.seed)?,
        eval_interval: s.pick(a.eval_interval, "eval-interval", base.eval_interval)?,
        checkpoint_interval: s.pick(a.checkpoint_interval, "checkpoint-interval", base.checkpoint_interval)?,
    })
}

fn model_config(a: &Args, s: &Settings) -> CliResult<ModelConfig> {
    let d = ModelConfig::default();
    Ok(ModelConfig {
        down_blocks: s.pick(a.down_blocks, "down-blocks", d.down_blocks)?,
        base_filters: s.pick(a.base_filters, "base-filters", d.base_filters)?,
        comp_blocks: s.pick(a.comp_blocks, "comp-blocks", d.comp_blocks)?,
        leaky_slope: s.pick(a.leaky_slope, "leaky-slope", d.leaky_slope)?,
    })
}

pub fn run(a: Args, s: &Settings) -> CliResult<()> {
    let ds = load_dataset(&a.data)?;
    let (mut model, cfg, start) = match &a.resume {
        Some(path) => {
            let ck = TrainCheckpoint::load(path)?;
            if a.down_blocks.is_some() || a.base_filters.is_some() || a.comp_blocks.is_some() {
                log::warn!("architecture flags are ignored when resuming; the checkpoint fixes the model");
            }
            let cfg = train_config(&a, s, ck.config)?;
            (ck.model, cfg, ck.step)
        }
        None => {
            let cfg = train_config(&a, s, TrainConfig::default())?;
            (Model::new(model_config(&a, s)?, cfg.seed)?, cfg, 0)
        }
    };
    cfg.validate()?;
    model.config().check_grid(ds.config.nx, ds.config.ny)?;

    fs::create_dir_all(&a.out).map_err(|e| Failure::user(format!("{}: {e}", a.out.display())))?;
    let ck_path = a.out.join("checkpoint.lnck");
    let csv_path = a.out.join("loss.csv");
    let io_err = |e: std::io::Error| Failure::user(format!("{}: {e}", csv_path.display()));
    let append = start > 0 && csv_path.exists();
    let mut csv = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(&csv_path)
        .map_err(io_err)?;
    if !append {
        writeln!(csv, "{HISTORY_HEADER}").map_err(io_err)?;
    }

    let save = |model: &Model<f32>, step: u64| {
        TrainCheckpoint {
            model: model.clone(),
            config: cfg,
            step,
        }
        .save(&ck_path)
    };
    if start >= cfg.max_steps {
        save(&model, start)?;
        println!("no steps to run; checkpoint at step {start} written to {}", ck_path.display());
        return Ok(());
    }

    let mut last_saved = None;
    let outcome = train(&mut model, &ds, &cfg, start, |m, rec| {
        writeln!(csv, "{}", rec.csv_row()).map_err(|e| TrainError::io(&csv_path, e))?;
        let done = rec.step + 1;
        if cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 {
            save(m, done)?;
            last_saved = Some(done);
        }
        Ok(())
    });
    match outcome {
        Ok(history) => {
            save(&model, cfg.max_steps)?;
            let last = history.last().map(|r| r.total).unwrap_or(f64::NAN);
            println!(
                "trained steps {}..{} final_loss={last:e} checkpoint={}",
                start,
                cfg.max_steps,
                ck_path.display()
            );
            Ok(())
        }
        Err(e) => {
            let kept = match last_saved {
                Some(step) => format!("last good checkpoint (step {step}) kept at {}", ck_path.display()),
                None => "no checkpoint was written".to_string(),
            };
            let f = Failure::from(e);
            Err(match f {
                Failure::Numeric(m) => Failure::Numeric(format!("{m}; {kept}")),
                Failure::User(m) => Failure::User(format!("{m}; {kept}")),
            })
        }
    }
}
