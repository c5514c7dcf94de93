use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use latnet_autodiff::{Rect, Tensor};
use latnet_lbm::dataset::{load_dataset, DatasetConfig};
use latnet_lbm::scene::{random_scene, rasterize, SizeRange};
use latnet_lbm::snapshot::Snapshot;
use latnet_lbm::{BoundaryMask, LatticeState};
use latnet_model::convert::{mask_tensor, state_tensor};
use latnet_model::ModelError;
use latnet_train::TrainCheckpoint;

use crate::failure::{CliResult, Failure};
use crate::settings::Settings;

/// Half-open lattice rectangle `x0,y0,x1,y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchArg(pub Rect);

impl FromStr for PatchArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("expected x0,y0,x1,y1: {e}"))?;
        match v.as_slice() {
            &[x0, y0, x1, y1] if x0 < x1 && y0 < y1 => Ok(PatchArg(Rect::new(x0, x1, y0, y1))),
            _ => Err(format!("expected x0,y0,x1,y1 with x0<x1 and y0<y1, got '{s}'")),
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory for `frame_NNNN.lblt` files (steps 1..=steps) and `mask.lblt`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    /// Start from frame 0 and the mask of a dataset run.
    #[arg(long, conflicts_with = "mask")]
    data: Option<PathBuf>,
    /// Run index within --data.
    #[arg(long, requires = "data")]
    run: Option<usize>,
    /// LBLT mask file; the flow starts uniform at the inlet velocity.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Grid size of a random scene (used without --data or --mask).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    objects: Option<usize>,
    #[arg(long)]
    min_size: Option<usize>,
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    scene_seed: Option<u64>,
    /// Inlet velocity of the uniform initial flow.
    #[arg(long)]
    inlet: Option<f64>,
    /// Decode and write only this region, `x0,y0,x1,y1` (half-open).
    #[arg(long)]
    patch: Option<PatchArg>,
}

fn initial(a: &Args, s: &Settings) -> CliResult<(LatticeState, BoundaryMask)> {
    let d = DatasetConfig::default();
    let inlet = s.pick(a.inlet, "inlet", d.solver.inlet_velocity)?;
    let uniform = |mask: BoundaryMask| -> CliResult<(LatticeState, BoundaryMask)> {
        let mut f = LatticeState::uniform(mask.nx, mask.ny, 1.0, [inlet, 0.0])?;
        f.clear_solids(&mask);
        Ok((f, mask))
    };
    if let Some(dir) = &a.data {
        let ds = load_dataset(dir)?;
        let run = a.run.unwrap_or(0);
        let rec = ds
            .runs
            .get(run)
            .ok_or_else(|| Failure::user(format!("dataset has {} runs, asked for run {run}", ds.runs.len())))?;
        return Ok((rec.frames[0].clone(), rec.mask.clone()));
    }
    if let Some(path) = &a.mask {
        return uniform(Snapshot::read(path)?.to_mask()?);
    }
    let size = s.pick_opt(a.size, "size")?;
    let nx = s.pick(a.nx, "nx", size.unwrap_or(d.nx))?;
    let ny = s.pick(a.ny, "ny", size.unwrap_or(d.ny))?;
    let sizes = SizeRange {
        min: s.pick(a.min_size, "min-size", d.sizes.min)?,
        max: s.pick(a.max_size, "max-size", d.sizes.max)?,
    };
    let objects = s.pick(a.objects, "objects", d.object_count)?;
    let seed = s.pick(a.scene_seed, "scene-seed", 0)?;
    uniform(rasterize(&random_scene(nx, ny, objects, sizes, seed)?)?)
}

fn write_frame(dir: &std::path::Path, t: usize, f: &Tensor<f32>) -> CliResult<()> {
    let (_, h, w, c) = f.dims4()?;
    let snap = Snapshot::new(vec![h as u32, w as u32, c as u32], f.data().to_vec())?;
    snap.write(dir.join(format!("frame_{t:04}.lblt")))?;
    Ok(())
}

pub fn run(a: Args, s: &Settings) -> CliResult<()> {
    let steps = s.pick(a.steps, "steps", 32)?;
    let model = TrainCheckpoint::load(&a.checkpoint)?.model;
    let (f0, mask) = initial(&a, s)?;
    model.config().check_grid(mask.nx, mask.ny)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::user(format!("{}: {e}", a.out.display())))?;
    Snapshot::from_mask(&mask).write(a.out.join("mask.lblt"))?;

    let (mul, add) = model.gates(&mask_tensor(&mask))?;
    let mut state = model.encode_tensor(&state_tensor(&f0))?;
    for t in 1..=steps {
        let diverged = |e: ModelError| match e {
            ModelError::Tensor(source) => ModelError::Diverged { step: t, source },
            other => other,
        };
        state = model.step_tensor(&state, &mul, &add).map_err(diverged)?;
        let frame = match a.patch {
            Some(PatchArg(region)) => model.decode_patch(&state, region).map_err(diverged)?.values,
            None => model.decode_tensor(&state).map_err(diverged)?,
        };
        write_frame(&a.out, t, &frame)?;
    }
    println!(
        "wrote {steps} frames of {}x{}{} to {}",
        mask.nx,
        mask.ny,
        a.patch
            .map(|PatchArg(r)| format!(" (patch x {}..{}, y {}..{})", r.h0, r.h1, r.w0, r.w1))
            .unwrap_or_default(),
        a.out.display()
    );
    Ok(())
}
