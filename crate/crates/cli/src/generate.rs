use std::path::PathBuf;

use latnet_lbm::dataset::{generate_dataset, save_dataset, DatasetConfig};
use latnet_lbm::scene::SizeRange;
use latnet_lbm::{BoundaryMode, SolverConfig};

use crate::failure::CliResult;
use crate::settings::Settings;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    /// Square grid size; overridden per axis by --nx / --ny.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Obstacles per scene.
    #[arg(long)]
    objects: Option<usize>,
    /// Smallest obstacle extent in cells.
    #[arg(long)]
    min_size: Option<usize>,
    /// Largest obstacle extent in cells.
    #[arg(long)]
    max_size: Option<usize>,
    /// Frames recorded per run.
    #[arg(long)]
    frames: Option<usize>,
    /// Solver steps between frames.
    #[arg(long)]
    interval: Option<usize>,
    /// Solver steps before frame 0.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Inlet velocity in lattice units.
    #[arg(long)]
    inlet: Option<f64>,
    /// `channel` (periodic in y, inlet/outlet in x) or `periodic`.
    #[arg(long)]
    boundary_mode: Option<BoundaryMode>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn dataset_config(a: &Args, s: &Settings) -> CliResult<DatasetConfig> {
    let d = DatasetConfig::default();
    let size = s.pick_opt(a.size, "size")?;
    let sizes = SizeRange {
        min: s.pick(a.min_size, "min-size", d.sizes.min)?,
        max: s.pick(a.max_size, "max-size", d.sizes.max)?,
    };
    Ok(DatasetConfig {
        nx: s.pick(a.nx, "nx", size.unwrap_or(d.nx))?,
        ny: s.pick(a.ny, "ny", size.unwrap_or(d.ny))?,
        object_count: s.pick(a.objects, "objects", d.object_count)?,
        sizes,
        solver: SolverConfig {
            tau: s.pick(a.tau, "tau", d.solver.tau)?,
            inlet_velocity: s.pick(a.inlet, "inlet", d.solver.inlet_velocity)?,
            boundary_mode: s.pick(a.boundary_mode, "boundary-mode", d.solver.boundary_mode)?,
        },
        warmup_steps: s.pick(a.warmup, "warmup", d.warmup_steps)?,
        frames_per_run: s.pick(a.frames, "frames", d.frames_per_run)?,
        subsample_interval: s.pick(a.interval, "interval", d.subsample_interval)?,
        seed: s.pick(a.seed, "seed", d.seed)?,
    })
}

pub fn run(a: Args, s: &Settings) -> CliResult<()> {
    let cfg = dataset_config(&a, s)?;
    let runs = s.pick(a.runs, "runs", 10)?;
    if runs == 0 {
        log::warn!("--runs 0: writing an empty dataset");
    }
    let ds = generate_dataset(runs, &cfg)?;
    save_dataset(&a.out, &ds)?;
    println!(
        "runs={} frames_per_run={} discarded_unstable={} grid={}x{} out={}",
        ds.runs.len(),
        cfg.frames_per_run,
        ds.discarded_unstable,
        cfg.nx,
        cfg.ny,
        a.out.display()
    );
    Ok(())
}
