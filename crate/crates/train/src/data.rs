//! Training windows and the deterministic batch sampler.

use latnet_autodiff::{Real, Tensor};
use latnet_lbm::dataset::{mix_seed, Dataset};
use latnet_model::convert::{mask_tensor, stack, state_tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TrainError};

/// `unroll + 1` consecutive frames of one run, starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub run: usize,
    pub start: usize,
}

/// Every window that fits inside a single run, in (run, start) order.
pub fn windows(ds: &Dataset, unroll: usize) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for (run, rec) in ds.runs.iter().enumerate() {
        if rec.frames.len() > unroll {
            out.extend((0..rec.frames.len() - unroll).map(|start| Window { run, start }));
        }
    }
    if out.is_empty() {
        return Err(TrainError::NoWindows {
            needed: unroll + 1,
            longest: ds.runs.iter().map(|r| r.frames.len()).max().unwrap_or(0),
        });
    }
    Ok(out)
}

/// Draws windows as consecutive slices of per-epoch permutations. The
/// window used at any (step, slot) depends only on the seed, so a resumed
/// run sees the same sequence as an uninterrupted one.
#[derive(Debug, Clone)]
pub struct Sampler {
    windows: Vec<Window>,
    seed: u64,
    epoch: Option<(u64, Vec<usize>)>,
}

impl Sampler {
    pub fn new(windows: Vec<Window>, seed: u64) -> Self {
        Sampler {
            windows,
            seed,
            epoch: None,
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// The `index`-th window drawn overall.
    pub fn get(&mut self, index: u64) -> Window {
        let n = self.windows.len() as u64;
        let (epoch, pos) = (index / n, (index % n) as usize);
        if self.epoch.as_ref().map(|e| e.0) != Some(epoch) {
            let mut perm: Vec<usize> = (0..self.windows.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(self.seed, epoch, 0x5eed)));
            self.epoch = Some((epoch, perm));
        }
        self.windows[self.epoch.as_ref().unwrap().1[pos]]
    }

    /// Windows for optimizer step `step` with `batch` samples each.
    pub fn batch(&mut self, step: u64, batch: usize) -> Vec<Window> {
        (0..batch as u64).map(|b| self.get(step * batch as u64 + b)).collect()
    }
}

/// Stacked tensors for a set of windows: `frames[t]` is `(n, nx, ny, 9)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub mask: Tensor<T>,
    pub frames: Vec<Tensor<T>>,
}

impl<T: Real> Batch<T> {
    pub fn gather(ds: &Dataset, windows: &[Window], unroll: usize) -> Result<Self> {
        let masks: Vec<Tensor<T>> = windows.iter().map(|w| mask_tensor(&ds.runs[w.run].mask)).collect();
        let frames = (0..=unroll)
            .map(|t| {
                let parts: Vec<Tensor<T>> = windows
                    .iter()
                    .map(|w| state_tensor(&ds.runs[w.run].frames[w.start + t]))
                    .collect();
                stack(&parts)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Batch {
            mask: stack(&masks)?,
            frames,
        })
    }

    pub fn unroll(&self) -> usize {
        self.frames.len() - 1
    }
}
