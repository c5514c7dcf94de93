//! Solver-generated training and test data.
//!
//! On disk a dataset is a directory:
//!
//! ```text
//! dataset.meta              key=value: dims, seed, solver and sampling settings
//! run_0000/run.meta         key=value: run seed, frame steps, obstacle list
//! run_0000/mask.lblt        boundary mask
//! run_0000/frame_0000.lblt  one LBLT snapshot per recorded frame
//! ...
//! ```
//!
//! While a save is in progress the directory holds a `.partial` marker,
//! removed only once every file has been written.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LbmError, Result};
use crate::keyvalue::KeyValues;
use crate::scene::{random_scene, rasterize, SceneObject, SceneSpec, Shape, SizeRange};
use crate::snapshot::Snapshot;
use crate::solver::Simulation;
use crate::state::{BoundaryMask, BoundaryMode, LatticeState, SolverConfig};

pub const META_VERSION: u32 = 1;
pub const PARTIAL_MARKER: &str = ".partial";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub nx: usize,
    pub ny: usize,
    pub object_count: usize,
    pub sizes: SizeRange,
    pub solver: SolverConfig,
    pub warmup_steps: usize,
    pub frames_per_run: usize,
    /// Solver steps between consecutive frames.
    pub subsample_interval: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            nx: 64,
            ny: 64,
            object_count: 2,
            sizes: SizeRange { min: 6, max: 20 },
            solver: SolverConfig::default(),
            warmup_steps: 0,
            frames_per_run: 32,
            subsample_interval: 120,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub scene: SceneSpec,
    pub mask: BoundaryMask,
    pub frames: Vec<LatticeState>,
    pub warmup_steps: usize,
    pub subsample_interval: usize,
}

impl DatasetRecord {
    /// Solver step at which frame `k` was recorded.
    pub fn frame_step(&self, k: usize) -> usize {
        self.warmup_steps + k * self.subsample_interval
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub runs: Vec<DatasetRecord>,
    /// Attempts thrown away because the solver went unstable.
    pub discarded_unstable: usize,
}

/// SplitMix64 finalizer, used to derive independent per-run seeds.
pub fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one scene and records its frames.
pub fn simulate_scene(scene: SceneSpec, cfg: &DatasetConfig) -> Result<DatasetRecord> {
    let mask = rasterize(&scene)?;
    let mut sim = Simulation::new(mask.clone(), cfg.solver)?;
    sim.advance(cfg.warmup_steps)?;
    let mut frames = Vec::with_capacity(cfg.frames_per_run);
    for k in 0..cfg.frames_per_run {
        if k > 0 {
            sim.advance(cfg.subsample_interval)?;
        }
        frames.push(sim.state.clone());
    }
    Ok(DatasetRecord {
        scene,
        mask,
        frames,
        warmup_steps: cfg.warmup_steps,
        subsample_interval: cfg.subsample_interval,
    })
}

/// Generates `n_runs` random scenes and their trajectories.
///
/// Each run starts from `equilibrium(1, (u_in, 0))` on the fluid cells. A run
/// that goes unstable is logged and replaced by a fresh scene. More unstable
/// attempts than half of `n_runs` aborts with a distribution error.
pub fn generate_dataset(n_runs: usize, cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.solver.validate()?;
    if cfg.subsample_interval == 0 {
        return Err(LbmError::InvalidInput("subsample interval must be positive".into()));
    }
    let mut runs = Vec::with_capacity(n_runs);
    let mut discarded = 0;
    for run in 0..n_runs {
        let mut attempt = 0u64;
        loop {
            let seed = mix_seed(cfg.seed, run as u64, attempt);
            let scene = random_scene(cfg.nx, cfg.ny, cfg.object_count, cfg.sizes, seed)?;
            match simulate_scene(scene, cfg) {
                Ok(record) => {
                    runs.push(record);
                    break;
                }
                Err(err @ LbmError::Instability { .. }) => {
                    discarded += 1;
                    log::warn!("run {run} (scene seed {seed}) discarded: {err}");
                    if 2 * discarded > n_runs {
                        return Err(LbmError::Distribution {
                            unstable: discarded,
                            requested: n_runs,
                        });
                    }
                    attempt += 1;
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(Dataset {
        config: cfg.clone(),
        runs,
        discarded_unstable: discarded,
    })
}

fn run_dir(root: &Path, run: usize) -> PathBuf {
    root.join(format!("run_{run:04}"))
}

fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("frame_{k:04}.lblt"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LbmError::io(path, e))
}

fn read_kv(path: &Path) -> Result<KeyValues> {
    let text = fs::read_to_string(path).map_err(|e| LbmError::io(path, e))?;
    KeyValues::parse(&text)
}

fn dataset_meta(ds: &Dataset) -> KeyValues {
    let c = &ds.config;
    let mut kv = KeyValues::new();
    kv.push("format_version", META_VERSION)
        .push("nx", c.nx)
        .push("ny", c.ny)
        .push("runs", ds.runs.len())
        .push("seed", c.seed)
        .push("tau", c.solver.tau)
        .push("inlet_velocity", c.solver.inlet_velocity)
        .push("boundary_mode", c.solver.boundary_mode.as_str())
        .push("interval", c.subsample_interval)
        .push("warmup", c.warmup_steps)
        .push("frames", c.frames_per_run)
        .push("objects", c.object_count)
        .push("size_min", c.sizes.min)
        .push("size_max", c.sizes.max)
        .push("discarded_unstable", ds.discarded_unstable);
    kv
}

fn record_meta(rec: &DatasetRecord) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.push("format_version", META_VERSION)
        .push("nx", rec.scene.nx)
        .push("ny", rec.scene.ny)
        .push("seed", rec.scene.seed)
        .push("interval", rec.subsample_interval)
        .push("warmup", rec.warmup_steps)
        .push("frames", rec.frames.len())
        .push(
            "frame_steps",
            (0..rec.frames.len())
                .map(|k| rec.frame_step(k).to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .push("objects", rec.scene.objects.len());
    for (k, o) in rec.scene.objects.iter().enumerate() {
        kv.push(
            &format!("object.{k}"),
            format!(
                "{} {} {} {} {}",
                o.shape.as_str(),
                o.center[0],
                o.center[1],
                o.half_extent[0],
                o.half_extent[1]
            ),
        );
    }
    kv
}

fn parse_object(raw: &str) -> Result<SceneObject> {
    let bad = || LbmError::Format {
        offset: 0,
        message: format!("bad object entry '{raw}'"),
    };
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let shape = Shape::parse(parts[0]).ok_or_else(bad)?;
    let n: Vec<usize> = parts[1..]
        .iter()
        .map(|p| p.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    Ok(SceneObject {
        shape,
        center: [n[0], n[1]],
        half_extent: [n[2], n[3]],
    })
}

/// Writes one run into `dir`, which must exist.
pub fn save_record(dir: &Path, rec: &DatasetRecord) -> Result<()> {
    write_text(&dir.join("run.meta"), &record_meta(rec).to_text())?;
    Snapshot::from_mask(&rec.mask).write(dir.join("mask.lblt"))?;
    for (k, frame) in rec.frames.iter().enumerate() {
        Snapshot::from_state(frame).write(frame_path(dir, k))?;
    }
    Ok(())
}

pub fn load_record(dir: &Path) -> Result<DatasetRecord> {
    let kv = read_kv(&dir.join("run.meta"))?;
    kv.check_version(META_VERSION)?;
    let nx: usize = kv.require("nx")?;
    let ny: usize = kv.require("ny")?;
    let n_objects: usize = kv.require("objects")?;
    let objects = (0..n_objects)
        .map(|k| {
            let key = format!("object.{k}");
            parse_object(kv.get(&key).ok_or_else(|| LbmError::Format {
                offset: 0,
                message: format!("missing key '{key}'"),
            })?)
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = SceneSpec {
        nx,
        ny,
        objects,
        seed: kv.require("seed")?,
    };
    let mask = Snapshot::read(dir.join("mask.lblt"))?.to_mask()?;
    let n_frames: usize = kv.require("frames")?;
    let frames = (0..n_frames)
        .map(|k| Snapshot::read(frame_path(dir, k))?.to_state())
        .collect::<Result<Vec<_>>>()?;
    for f in &frames {
        if (f.nx, f.ny) != (nx, ny) {
            return Err(LbmError::Shape(format!(
                "{}: frame is {}x{}, run is {nx}x{ny}",
                dir.display(),
                f.nx,
                f.ny
            )));
        }
    }
    Ok(DatasetRecord {
        scene,
        mask,
        frames,
        warmup_steps: kv.require("warmup")?,
        subsample_interval: kv.require("interval")?,
    })
}

/// Writes the dataset under `root`, creating it if needed.
pub fn save_dataset(root: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| LbmError::io(root, e))?;
    let marker = root.join(PARTIAL_MARKER);
    write_text(&marker, "incomplete dataset\n")?;
    for (k, rec) in ds.runs.iter().enumerate() {
        let dir = run_dir(root, k);
        fs::create_dir_all(&dir).map_err(|e| LbmError::io(&dir, e))?;
        save_record(&dir, rec)?;
    }
    write_text(&root.join("dataset.meta"), &dataset_meta(ds).to_text())?;
    fs::remove_file(&marker).map_err(|e| LbmError::io(&marker, e))
}

pub fn load_dataset(root: &Path) -> Result<Dataset> {
    if root.join(PARTIAL_MARKER).exists() {
        return Err(LbmError::Format {
            offset: 0,
            message: format!("{} is an incomplete dataset", root.display()),
        });
    }
    let kv = read_kv(&root.join("dataset.meta"))?;
    kv.check_version(META_VERSION)?;
    let boundary_mode: String = kv.require("boundary_mode")?;
    let config = DatasetConfig {
        nx: kv.require("nx")?,
        ny: kv.require("ny")?,
        object_count: kv.require("objects")?,
        sizes: SizeRange {
            min: kv.require("size_min")?,
            max: kv.require("size_max")?,
        },
        solver: SolverConfig {
            tau: kv.require("tau")?,
            inlet_velocity: kv.require("inlet_velocity")?,
            boundary_mode: boundary_mode.parse::<BoundaryMode>()?,
        },
        warmup_steps: kv.require("warmup")?,
        frames_per_run: kv.require("frames")?,
        subsample_interval: kv.require("interval")?,
        seed: kv.require("seed")?,
    };
    let n_runs: usize = kv.require("runs")?;
    let runs = (0..n_runs)
        .map(|k| load_record(&run_dir(root, k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        config,
        runs,
        discarded_unstable: kv.require("discarded_unstable")?,
    })
}
