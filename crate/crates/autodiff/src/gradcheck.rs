//! Central finite-difference checks of reverse-mode gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::param::ParamStore;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
}

/// Compares the gradient of `f` with central differences of step `h` at
/// every element of every input.
///
/// `f` builds a scalar from the inputs it receives as graph leaves. The
/// relative error of each element uses a floor of `1e-3` times the largest
/// gradient magnitude seen, so elements whose true gradient is essentially
/// zero are judged on the scale of the whole gradient.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], h: f64, f: F) -> Result<CheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars = xs.iter().map(|x| g.input(x.clone())).collect::<Result<Vec<_>>>()?;
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };

    let mut g = Graph::new();
    let vars = inputs.iter().map(|x| g.input(x.clone())).collect::<Result<Vec<_>>>()?;
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;
    let analytic: Vec<Tensor<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, x)| grads.wrt(v).cloned().unwrap_or_else(|| Tensor::zeros(x.shape())))
        .collect();

    let mut numeric = Vec::with_capacity(inputs.len());
    let mut work = inputs.to_vec();
    for k in 0..inputs.len() {
        let mut nk = Tensor::zeros(inputs[k].shape());
        for e in 0..inputs[k].len() {
            let x0 = work[k].data()[e];
            work[k].data_mut()[e] = x0 + h;
            let fp = eval(&work)?;
            work[k].data_mut()[e] = x0 - h;
            let fm = eval(&work)?;
            work[k].data_mut()[e] = x0;
            nk.data_mut()[e] = (fp - fm) / (2.0 * h);
        }
        numeric.push(nk);
    }

    let scale = analytic
        .iter()
        .chain(&numeric)
        .flat_map(|t| t.data().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(1e-12);
    let mut report = CheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
    };
    for (a, n) in analytic.iter().zip(&numeric) {
        for (&av, &nv) in a.data().iter().zip(n.data()) {
            let abs = (av - nv).abs();
            report.max_abs_error = report.max_abs_error.max(abs);
            report.max_rel_error = report.max_rel_error.max(abs / av.abs().max(nv.abs()).max(floor));
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Like [`check_gradients`] but for the parameters of a store, perturbing
/// at most `per_tensor` elements of each parameter (chosen from `seed`;
/// all of them when the tensor is small enough).
pub fn check_param_gradients<F>(
    store: &ParamStore<f64>,
    h: f64,
    per_tensor: usize,
    seed: u64,
    f: F,
) -> Result<CheckReport>
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let mut g = Graph::new();
    let out = f(&mut g, store)?;
    let analytic = g.backward(out)?.for_params(store);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut work = store.clone();
    for (pi, id) in store.ids().enumerate() {
        let n = store.get(id).value.len();
        let picks: Vec<usize> = if n <= per_tensor {
            (0..n).collect()
        } else {
            rand::seq::index::sample(&mut rng, n, per_tensor).into_vec()
        };
        for e in picks {
            let x0 = store.get(id).value.data()[e];
            let mut eval = |x: f64| -> Result<f64> {
                work.get_mut(id).value.data_mut()[e] = x;
                let mut g = Graph::new();
                let out = f(&mut g, &work)?;
                Ok(g.value(out).item())
            };
            let num = (eval(x0 + h)? - eval(x0 - h)?) / (2.0 * h);
            work.get_mut(id).value.data_mut()[e] = x0;
            pairs.push((analytic[pi].data()[e], num));
        }
    }

    let scale = analytic
        .iter()
        .flat_map(|t| t.data().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(1e-12);
    let mut report = CheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: pairs.len(),
    };
    for (a, n) in pairs {
        let abs = (a - n).abs();
        report.max_abs_error = report.max_abs_error.max(abs);
        report.max_rel_error = report.max_rel_error.max(abs / a.abs().max(n.abs()).max(floor));
    }
    Ok(report)
}
