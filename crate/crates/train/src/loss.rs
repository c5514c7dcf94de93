use latnet_autodiff::{Graph, Real, Var};
use latnet_model::Model;

use crate::data::Batch;
use crate::error::Result;

/// Nodes of one unrolled forward pass.
#[derive(Debug, Clone)]
pub struct LossTerms {
    /// `mse + lambda * gdl`.
    pub total: Var,
    /// Per-step MSE averaged over the unroll.
    pub mse: Var,
    /// Per-step GDL averaged over the unroll.
    pub gdl: Var,
    pub step_mse: Vec<Var>,
    pub step_gdl: Vec<Var>,
}

/// Encodes frame 0, advances the latent `unroll` times and compares every
/// decoded state with the matching solver frame.
pub fn unrolled_loss<T: Real>(model: &Model<T>, g: &mut Graph<T>, batch: &Batch<T>, lambda_gdl: f64) -> Result<LossTerms> {
    let f0 = g.input(batch.frames[0].clone())?;
    let mask = g.input(batch.mask.clone())?;
    let gates = model.encode_boundary(g, mask)?;
    let mut state = model.encode_flow(g, f0)?;
    let targets = batch.frames[1..]
        .iter()
        .map(|f| g.input(f.clone()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let decoded = (0..targets.len())
        .map(|_| {
            state = model.compress_step(g, state, gates)?;
            model.decode(g, state)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    predicted_loss(g, &decoded, &targets, lambda_gdl)
}

/// The loss for already decoded predictions.
pub fn predicted_loss<T: Real>(g: &mut Graph<T>, predicted: &[Var], targets: &[Var], lambda_gdl: f64) -> Result<LossTerms> {
    let mut step_mse = Vec::with_capacity(targets.len());
    let mut step_gdl = Vec::with_capacity(targets.len());
    for (&p, &t) in predicted.iter().zip(targets) {
        step_mse.push(g.mse(p, t)?);
        step_gdl.push(g.gdl(p, t)?);
    }
    let inv = 1.0 / targets.len() as f64;
    let mse = mean_of(g, &step_mse, inv)?;
    let gdl = mean_of(g, &step_gdl, inv)?;
    let weighted = g.scale(gdl, lambda_gdl)?;
    let total = g.add(mse, weighted)?;
    Ok(LossTerms {
        total,
        mse,
        gdl,
        step_mse,
        step_gdl,
    })
}

fn mean_of<T: Real>(g: &mut Graph<T>, parts: &[Var], inv: f64) -> Result<Var> {
    let mut acc = parts[0];
    for &p in &parts[1..] {
        acc = g.add(acc, p)?;
    }
    Ok(g.scale(acc, inv)?)
}
