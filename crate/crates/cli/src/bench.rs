use std::path::PathBuf;
use std::time::Instant;

use latnet_lbm::scene::{random_scene, rasterize, SizeRange};
use latnet_lbm::{mlups, Simulation, SolverConfig};
use latnet_model::convert::{mask_tensor, state_tensor};
use latnet_model::{Model, ModelConfig};
use latnet_train::TrainCheckpoint;

use crate::failure::{CliResult, Failure};
use crate::settings::Settings;

pub const HEADER: &str = "kind,dims,cells,steps,wall_seconds,mlups";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Square grid size; overridden per axis by --nx / --ny.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Solver steps per timed repetition.
    #[arg(long)]
    steps: Option<u64>,
    /// Timed repetitions; the median is reported (at least 5).
    #[arg(long)]
    reps: Option<usize>,
    /// Untimed repetitions before measuring.
    #[arg(long)]
    warmup: Option<usize>,
    /// Solver steps one surrogate step stands for.
    #[arg(long)]
    steps_equivalent: Option<u64>,
    /// Model to time; a freshly initialised default model otherwise.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Time only the solver.
    #[arg(long)]
    no_surrogate: bool,
    /// Skip timing: report MLUPS for this wall time per surrogate step.
    #[arg(long)]
    inject_seconds: Option<f64>,
    /// Grid for --inject-seconds, e.g. `160x160x160`.
    #[arg(long, requires = "inject_seconds")]
    dims: Option<String>,
    /// Also write the report to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: &'static str,
    pub dims: String,
    pub cells: u64,
    pub steps: u64,
    pub wall_seconds: f64,
    pub mlups: f64,
}

impl Row {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:.6}",
            self.kind, self.dims, self.cells, self.steps, self.wall_seconds, self.mlups
        )
    }
}

fn parse_dims(s: &str) -> CliResult<Vec<u64>> {
    s.split('x')
        .map(|p| p.trim().parse::<u64>().ok().filter(|&d| d > 0))
        .collect::<Option<Vec<_>>>()
        .filter(|d| !d.is_empty())
        .ok_or_else(|| Failure::user(format!("--dims expects sizes joined by 'x', got '{s}'")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of `reps` calls after `warmup` untimed ones.
fn time<E>(warmup: usize, reps: usize, mut f: impl FnMut() -> Result<(), E>) -> Result<f64, E> {
    for _ in 0..warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

pub fn run(a: Args, s: &Settings) -> CliResult<()> {
    let steps_equiv = s.pick(a.steps_equivalent, "steps-equivalent", 120)?;
    let mut rows = Vec::new();
    if let Some(secs) = a.inject_seconds {
        let dims = match &a.dims {
            Some(d) => parse_dims(d)?,
            None => {
                let size = s.pick_opt(a.size, "size")?;
                vec![
                    s.pick(a.nx, "nx", size.unwrap_or(256))? as u64,
                    s.pick(a.ny, "ny", size.unwrap_or(256))? as u64,
                ]
            }
        };
        let cells = dims.iter().product();
        rows.push(Row {
            kind: "injected",
            dims: dims.iter().map(u64::to_string).collect::<Vec<_>>().join("x"),
            cells,
            steps: steps_equiv,
            wall_seconds: secs,
            mlups: mlups(cells, steps_equiv, secs)?,
        });
    } else {
        let size = s.pick_opt(a.size, "size")?;
        let nx = s.pick(a.nx, "nx", size.unwrap_or(256))?;
        let ny = s.pick(a.ny, "ny", size.unwrap_or(256))?;
        let steps = s.pick(a.steps, "steps", 20)?;
        let reps = s.pick(a.reps, "reps", 5)?;
        let warmup = s.pick(a.warmup, "warmup", 2)?;
        if reps < 5 {
            return Err(Failure::user(format!("--reps must be at least 5, got {reps}")));
        }
        let cells = (nx * ny) as u64;
        let dims = format!("{nx}x{ny}");
        let scene = random_scene(nx, ny, 2, SizeRange { min: 6, max: 20 }, 0)?;
        let mask = rasterize(&scene)?;
        let mut sim = Simulation::new(mask.clone(), SolverConfig::default())?;
        let secs = time(warmup, reps, || sim.advance(steps as usize))?;
        rows.push(Row {
            kind: "solver",
            dims: dims.clone(),
            cells,
            steps,
            wall_seconds: secs,
            mlups: mlups(cells, steps, secs)?,
        });

        if !a.no_surrogate {
            let model = match &a.checkpoint {
                Some(p) => TrainCheckpoint::load(p)?.model,
                None => Model::new(ModelConfig::default(), 0)?,
            };
            model.config().check_grid(nx, ny)?;
            let (mul, add) = model.gates(&mask_tensor(&mask))?;
            let latent = model.encode_tensor(&state_tensor(&sim.state))?;
            let secs = time(warmup, reps, || model.step_tensor(&latent, &mul, &add).map(drop))?;
            rows.push(Row {
                kind: "surrogate",
                dims,
                cells,
                steps: steps_equiv,
                wall_seconds: secs,
                mlups: mlups(cells, steps_equiv, secs)?,
            });
        }
    }

    let mut text = format!("{HEADER}\n");
    for r in &rows {
        text.push_str(&r.csv());
        text.push('\n');
    }
    print!("{text}");
    if let Some(path) = &a.out {
        std::fs::write(path, &text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_median() {
        assert_eq!(parse_dims("160x160x160").unwrap(), vec![160, 160, 160]);
        assert!(parse_dims("160x0").is_err());
        assert!(parse_dims("").is_err());
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
