//! Solver states and masks as NHWC tensors. The lattice's `x` runs along
//! the tensor's height axis and `y` along its width, so the memory layouts
//! coincide.

use latnet_autodiff::{Real, Tensor};
use latnet_lbm::{BoundaryMask, LatticeState, Q};

use crate::error::{ModelError, Result};

pub fn state_tensor<T: Real>(s: &LatticeState) -> Tensor<T> {
    Tensor::from_f64(&[1, s.nx, s.ny, Q], &s.f).expect("state length matches its dims")
}

pub fn mask_tensor<T: Real>(m: &BoundaryMask) -> Tensor<T> {
    Tensor::from_f64(&[1, m.nx, m.ny, 1], &m.values()).expect("mask length matches its dims")
}

/// Sample `b` of a `(n, nx, ny, 9)` tensor as a solver state.
pub fn tensor_state<T: Real>(t: &Tensor<T>, b: usize) -> Result<LatticeState> {
    let (n, nx, ny, c) = t.dims4()?;
    if c != Q || b >= n {
        return Err(ModelError::Config(format!(
            "cannot read sample {b} of a {:?} tensor as a lattice state",
            t.shape()
        )));
    }
    let len = nx * ny * Q;
    let f = t.data()[b * len..(b + 1) * len].iter().map(|&v| v.as_f64()).collect();
    Ok(LatticeState::from_vec(nx, ny, f)?)
}

/// Concatenates equally shaped tensors along the batch axis.
pub fn stack<T: Real>(parts: &[Tensor<T>]) -> Result<Tensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| ModelError::Config("cannot stack an empty list".into()))?;
    let (_, h, w, c) = first.dims4()?;
    let mut n = 0;
    let mut data = Vec::with_capacity(first.len() * parts.len());
    for p in parts {
        let (pn, ph, pw, pc) = p.dims4()?;
        if (ph, pw, pc) != (h, w, c) {
            return Err(ModelError::Config(format!(
                "cannot stack {:?} with {:?}",
                p.shape(),
                first.shape()
            )));
        }
        n += pn;
        data.extend_from_slice(p.data());
    }
    Ok(Tensor::from_vec(&[n, h, w, c], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_agree() {
        let mut s = LatticeState::zeros(4, 6);
        s.set(3, 1, 7, 0.5);
        let t = state_tensor::<f64>(&s);
        assert_eq!(t.data()[((3 * 6) + 1) * 9 + 7], 0.5);
        assert_eq!(tensor_state(&t, 0).unwrap(), s);
        let mut m = BoundaryMask::fluid(4, 6);
        m.set_solid(2, 5, true);
        let mt = mask_tensor::<f32>(&m);
        assert_eq!(mt.data()[2 * 6 + 5], 1.0);
        let both = stack(&[t.clone(), t]).unwrap();
        assert_eq!(both.shape(), &[2, 4, 6, 9]);
        assert!(tensor_state(&both, 2).is_err());
    }
}
