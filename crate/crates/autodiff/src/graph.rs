//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every value it computes in creation order, which is
//! a topological order by construction. [`Graph::backward`] walks that
//! order in reverse and accumulates gradients additively, so a value used
//! twice receives the sum of both contributions.

use crate::conv;
use crate::error::{Result, TensorError};
use crate::param::{ParamId, ParamStore};
use crate::real::Real;
use crate::tensor::Tensor;

/// Handle to a value recorded in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    Conv2d { x: Var, k: Var, stride: usize },
    ConvTranspose2d { x: Var, k: Var, stride: usize },
    BiasAdd { x: Var, b: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    LeakyRelu { x: Var, slope: f64 },
    SliceChannels { x: Var, start: usize, len: usize },
    Sum(Var),
    Mse(Var, Var),
    Gdl(Var, Var),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

fn same_shape<T: Real>(op: &str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::Shape(format!(
            "{op}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn zip_map<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.shape(), data).expect("shapes checked by caller")
}

/// Terms of the gradient difference loss along one spatial axis of an
/// NHWC tensor: for every valid pair, `d = |a1 - a0| - |b1 - b0|` together
/// with the flat indices of the pair. Calls `visit(i0, i1, d, sign_a, sign_b)`.
fn gdl_axis<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    axis: usize,
    mut visit: impl FnMut(usize, usize, T, T, T),
) -> usize {
    let (n, h, w, c) = a.dims4().expect("rank checked by caller");
    let (dh, dw) = if axis == 1 { (1, 0) } else { (0, 1) };
    let mut count = 0;
    let (ad, bd) = (a.data(), b.data());
    for bi in 0..n {
        for y in 0..h - dh {
            for x in 0..w - dw {
                for ch in 0..c {
                    let i0 = ((bi * h + y) * w + x) * c + ch;
                    let i1 = ((bi * h + y + dh) * w + x + dw) * c + ch;
                    let da = ad[i1] - ad[i0];
                    let db = bd[i1] - bd[i0];
                    let d = da.abs() - db.abs();
                    visit(i0, i1, d, sign(da), sign(db));
                    count += 1;
                }
            }
        }
    }
    count
}

fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Total number of elements held by recorded values.
    pub fn element_count(&self) -> usize {
        self.nodes.iter().map(|n| n.value.len()).sum()
    }

    fn push(&mut self, value: Tensor<T>, op: Op, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(TensorError::Numeric { op: name });
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A constant leaf; gradients reach it but it belongs to no parameter.
    pub fn input(&mut self, value: Tensor<T>) -> Result<Var> {
        self.push(value, Op::Input, "input")
    }

    /// A leaf holding a copy of a parameter's current value.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        let value = store.get(id).value.clone();
        self.nodes.push(Node {
            value,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn conv2d(&mut self, x: Var, k: Var, stride: usize) -> Result<Var> {
        let y = conv::conv2d(self.value(x), self.value(k), stride)?;
        self.push(y, Op::Conv2d { x, k, stride }, "conv2d")
    }

    pub fn conv_transpose2d(&mut self, x: Var, k: Var, stride: usize) -> Result<Var> {
        let y = conv::conv_transpose2d(self.value(x), self.value(k), stride)?;
        self.push(y, Op::ConvTranspose2d { x, k, stride }, "conv_transpose2d")
    }

    /// Adds a per-channel bias over the last axis.
    pub fn bias_add(&mut self, x: Var, b: Var) -> Result<Var> {
        let xv = self.value(x);
        let bv = self.value(b);
        let c = *xv.shape().last().unwrap_or(&1);
        if bv.shape() != [c] {
            return Err(TensorError::Shape(format!(
                "bias_add: bias {:?} does not match {c} channels",
                bv.shape()
            )));
        }
        let mut y = xv.clone();
        for (i, v) in y.data_mut().iter_mut().enumerate() {
            *v += bv.data()[i % c];
        }
        self.push(y, Op::BiasAdd { x, b }, "bias_add")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let y = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(y, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.value(a), self.value(b))?;
        let y = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push(y, Op::Sub(a, b), "sub")
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let y = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(y, Op::Mul(a, b), "mul")
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Result<Var> {
        let st = T::from_f64(s);
        let y = self.value(x).map(|v| v * st);
        self.push(y, Op::Scale(x, s), "scale")
    }

    /// `x` for positive inputs, `slope * x` otherwise.
    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        let st = T::from_f64(slope);
        let y = self.value(x).map(|v| if v > T::zero() { v } else { v * st });
        self.push(y, Op::LeakyRelu { x, slope }, "leaky_relu")
    }

    /// Channels `[start, start + len)` of the last axis.
    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let shape = xv.shape().to_vec();
        let c = *shape.last().ok_or_else(|| TensorError::Shape("slice of a scalar".into()))?;
        if start + len > c {
            return Err(TensorError::Shape(format!(
                "slice_channels: [{start}, {}) exceeds {c} channels",
                start + len
            )));
        }
        let data: Vec<T> = xv
            .data()
            .chunks(c)
            .flat_map(|px| px[start..start + len].iter().copied())
            .collect();
        let mut out_shape = shape;
        *out_shape.last_mut().unwrap() = len;
        let y = Tensor::from_vec(&out_shape, data)?;
        self.push(y, Op::SliceChannels { x, start, len }, "slice_channels")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let y = Tensor::scalar(self.value(x).sum());
        self.push(y, Op::Sum(x), "sum")
    }

    /// Mean of `(a - b)^2` over all elements.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape("mse", av, bv)?;
        let n = T::from_f64(av.len() as f64);
        let s: T = av.data().iter().zip(bv.data()).map(|(&x, &y)| (x - y) * (x - y)).sum();
        self.push(Tensor::scalar(s / n), Op::Mse(a, b), "mse")
    }

    /// Gradient difference loss with exponent 2 on rank-4 NHWC tensors:
    /// the mean over valid neighbour pairs of `(|da| - |db|)^2` along the
    /// first spatial axis plus the same mean along the second.
    pub fn gdl(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape("gdl", av, bv)?;
        av.dims4()?;
        let mut total = T::zero();
        for axis in [1, 2] {
            let mut s = T::zero();
            let count = gdl_axis(av, bv, axis, |_, _, d, _, _| s += d * d);
            if count > 0 {
                total += s / T::from_f64(count as f64);
            }
        }
        self.push(Tensor::scalar(total), Op::Gdl(a, b), "gdl")
    }

    /// Reverse pass from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(lv.shape(), T::one()));

        fn accumulate<T: Real>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match node.op {
                Op::Input | Op::Param(_) => {}
                Op::Conv2d { x, k, stride } => {
                    let (dx, dk) = conv::conv2d_backward(self.value(x), self.value(k), stride, &g)?;
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, k, dk);
                }
                Op::ConvTranspose2d { x, k, stride } => {
                    let (dx, dk) =
                        conv::conv_transpose2d_backward(self.value(x), self.value(k), stride, &g)?;
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, k, dk);
                }
                Op::BiasAdd { x, b } => {
                    let c = self.value(b).len();
                    let mut db = vec![T::zero(); c];
                    for (j, &v) in g.data().iter().enumerate() {
                        db[j % c] += v;
                    }
                    accumulate(&mut grads, b, Tensor::from_vec(&[c], db)?);
                    accumulate(&mut grads, x, g.clone());
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, a, g.clone());
                    accumulate(&mut grads, b, g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, b, g.map(|v| -v));
                    accumulate(&mut grads, a, g.clone());
                }
                Op::Mul(a, b) => {
                    let ga = zip_map(&g, self.value(b), |x, y| x * y);
                    let gb = zip_map(&g, self.value(a), |x, y| x * y);
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
                Op::Scale(x, s) => {
                    let st = T::from_f64(s);
                    accumulate(&mut grads, x, g.map(|v| v * st));
                }
                Op::LeakyRelu { x, slope } => {
                    let st = T::from_f64(slope);
                    let gx = zip_map(&g, self.value(x), |gv, xv| if xv > T::zero() { gv } else { gv * st });
                    accumulate(&mut grads, x, gx);
                }
                Op::SliceChannels { x, start, len } => {
                    let xv = self.value(x);
                    let c = *xv.shape().last().unwrap();
                    let mut gx = Tensor::zeros(xv.shape());
                    for (dst, src) in gx.data_mut().chunks_mut(c).zip(g.data().chunks(len)) {
                        dst[start..start + len].copy_from_slice(src);
                    }
                    accumulate(&mut grads, x, gx);
                }
                Op::Sum(x) => {
                    let gx = Tensor::full(self.value(x).shape(), g.item());
                    accumulate(&mut grads, x, gx);
                }
                Op::Mse(a, b) => {
                    let (av, bv) = (self.value(a), self.value(b));
                    let s = g.item() * T::from_f64(2.0 / av.len() as f64);
                    let ga = zip_map(av, bv, |x, y| (x - y) * s);
                    accumulate(&mut grads, b, ga.map(|v| -v));
                    accumulate(&mut grads, a, ga);
                }
                Op::Gdl(a, b) => {
                    let (av, bv) = (self.value(a), self.value(b));
                    let (_, h, w, _) = av.dims4()?;
                    let mut ga = Tensor::zeros(av.shape());
                    let mut gb = Tensor::zeros(bv.shape());
                    for (axis, extent) in [(1, h), (2, w)] {
                        if extent < 2 {
                            continue;
                        }
                        let count = av.len() / extent * (extent - 1);
                        let s = g.item() * T::from_f64(2.0 / count as f64);
                        let gad = ga.data_mut();
                        let gbd = gb.data_mut();
                        gdl_axis(av, bv, axis, |i0, i1, d, sa, sb| {
                            let ta = s * d * sa;
                            gad[i1] += ta;
                            gad[i0] -= ta;
                            let tb = s * d * sb;
                            gbd[i1] -= tb;
                            gbd[i0] += tb;
                        });
                    }
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
            }
            grads[i] = Some(g);
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(id) => Some((id, i)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }
}

/// Result of a reverse pass.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    params: Vec<(ParamId, usize)>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to a recorded value, `None` if the loss does
    /// not depend on it.
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// One gradient per parameter of `store`, in store order. Parameters
    /// that were not used get zeros; parameters loaded more than once get
    /// the sum over their uses.
    pub fn for_params(&self, store: &ParamStore<T>) -> Vec<Tensor<T>> {
        let mut out: Vec<Tensor<T>> = store.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        for &(id, node) in &self.params {
            if let Some(g) = &self.grads[node] {
                out[id.index()].add_assign(g);
            }
        }
        out
    }
}
