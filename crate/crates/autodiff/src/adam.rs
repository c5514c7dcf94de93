use crate::error::{Result, TensorError};
use crate::param::ParamStore;
use crate::real::Real;
use crate::tensor::Tensor;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    /// Applies one update to every parameter of `store`; `grads` is in store
    /// order.
    pub fn step<T: Real>(&self, store: &mut ParamStore<T>, grads: &[Tensor<T>]) -> Result<()> {
        if grads.len() != store.len() {
            return Err(TensorError::Shape(format!(
                "{} gradients for {} parameters",
                grads.len(),
                store.len()
            )));
        }
        for (p, g) in store.iter_mut().zip(grads) {
            if p.value.shape() != g.shape() {
                return Err(TensorError::Shape(format!(
                    "gradient {:?} for parameter {} {:?}",
                    g.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
        }
        for (p, g) in store.iter_mut().zip(grads) {
            p.step += 1;
            let t = p.step as i32;
            let c1 = 1.0 - self.beta1.powi(t);
            let c2 = 1.0 - self.beta2.powi(t);
            let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
            let (one_b1, one_b2) = (T::from_f64(1.0 - self.beta1), T::from_f64(1.0 - self.beta2));
            let values = p.value.data_mut();
            let m = p.m.data_mut();
            let v = p.v.data_mut();
            for (k, &gk) in g.data().iter().enumerate() {
                m[k] = b1 * m[k] + one_b1 * gk;
                v[k] = b2 * v[k] + one_b2 * gk * gk;
                let m_hat = m[k].as_f64() / c1;
                let v_hat = v[k].as_f64() / c2;
                let update = self.lr * m_hat / (v_hat.sqrt() + self.eps);
                values[k] = T::from_f64(values[k].as_f64() - update);
            }
        }
        Ok(())
    }
}
