//! Convolution layers and the two residual blocks built from them.

use rand::Rng;

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::param::{ParamId, ParamStore};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Uniform with unit variance per unit fan-in.
    FanIn,
    Zero,
}

/// A same-padded convolution (or transpose convolution) with a
/// per-channel bias. The bias starts at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conv {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub stride: usize,
    pub transpose: bool,
    pub size: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl Conv {
    #[allow(clippy::too_many_arguments)]
    fn build<T: Real>(
        store: &mut ParamStore<T>,
        name: &str,
        size: usize,
        c_in: usize,
        c_out: usize,
        stride: usize,
        transpose: bool,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        let shape = if transpose {
            [size, size, c_out, c_in]
        } else {
            [size, size, c_in, c_out]
        };
        let kname = format!("{name}.kernel");
        let kernel = match init {
            Init::Zero => store.add_zeros(kname, &shape),
            Init::FanIn => {
                // A transpose conv with stride s sees size²/s² taps per output.
                let fan_in = if transpose {
                    (size * size * c_in / (stride * stride)).max(1)
                } else {
                    size * size * c_in
                };
                store.add_fan_in_uniform(kname, &shape, fan_in, rng)
            }
        };
        let bias = store.add_zeros(format!("{name}.bias"), &[c_out]);
        Conv {
            kernel,
            bias,
            stride,
            transpose,
            size,
            c_in,
            c_out,
        }
    }

    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        name: &str,
        size: usize,
        c_in: usize,
        c_out: usize,
        stride: usize,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        Self::build(store, name, size, c_in, c_out, stride, false, init, rng)
    }

    pub fn new_transpose<T: Real>(
        store: &mut ParamStore<T>,
        name: &str,
        size: usize,
        c_in: usize,
        c_out: usize,
        stride: usize,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        Self::build(store, name, size, c_in, c_out, stride, true, init, rng)
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let k = g.param(store, self.kernel);
        let b = g.param(store, self.bias);
        let y = if self.transpose {
            g.conv_transpose2d(x, k, self.stride)?
        } else {
            g.conv2d(x, k, self.stride)?
        };
        g.bias_add(y, b)
    }
}

/// `y = x + C2(σ(C1(σ(x))))` with two 3x3 convolutions. C2 starts at zero
/// so a fresh block is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResBlock {
    pub c1: Conv,
    pub c2: Conv,
}

impl ResBlock {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, c: usize, rng: &mut impl Rng) -> Self {
        ResBlock {
            c1: Conv::new(store, &format!("{name}.c1"), 3, c, c, 1, Init::FanIn, rng),
            c2: Conv::new(store, &format!("{name}.c2"), 3, c, c, 1, Init::Zero, rng),
        }
    }

    pub fn forward<T: Real>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        x: Var,
        slope: f64,
    ) -> Result<Var> {
        let h = g.leaky_relu(x, slope)?;
        let h = self.c1.forward(g, store, h)?;
        let h = g.leaky_relu(h, slope)?;
        let h = self.c2.forward(g, store, h)?;
        g.add(x, h)
    }
}

/// `y = P(x) + C2(σ(C1(σ(x))))` where C1 is 4x4 stride 2 doubling the
/// channels and P is a 1x1 stride-2 projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownResBlock {
    pub c1: Conv,
    pub c2: Conv,
    pub proj: Conv,
}

impl DownResBlock {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, c: usize, rng: &mut impl Rng) -> Self {
        DownResBlock {
            c1: Conv::new(store, &format!("{name}.c1"), 4, c, 2 * c, 2, Init::FanIn, rng),
            c2: Conv::new(store, &format!("{name}.c2"), 3, 2 * c, 2 * c, 1, Init::Zero, rng),
            proj: Conv::new(store, &format!("{name}.proj"), 1, c, 2 * c, 2, Init::FanIn, rng),
        }
    }

    pub fn forward<T: Real>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        x: Var,
        slope: f64,
    ) -> Result<Var> {
        let skip = self.proj.forward(g, store, x)?;
        let h = g.leaky_relu(x, slope)?;
        let h = self.c1.forward(g, store, h)?;
        let h = g.leaky_relu(h, slope)?;
        let h = self.c2.forward(g, store, h)?;
        g.add(skip, h)
    }
}
