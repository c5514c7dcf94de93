//! Network layout and forward passes.
//!
//! Every block is pre-activation: a leaky rectifier precedes each
//! convolution and residual branches end on a raw convolution whose
//! kernel starts at zero.

use latnet_autodiff::conv::{conv2d_region, conv_transpose2d_region, ConvGeometry};
use latnet_autodiff::{Conv, DownResBlock, Graph, Init, ParamStore, Real, Rect, ResBlock, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, FLOW_CHANNELS};
use crate::error::{ModelError, Result};

/// Stem to `base_filters`, then `down_blocks` x (down-res, res), then one
/// more res block.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    stem: Conv,
    stages: Vec<(DownResBlock, ResBlock)>,
    last: ResBlock,
}

impl Encoder {
    fn new<T: Real>(store: &mut ParamStore<T>, name: &str, c_in: usize, cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let base = cfg.base_filters;
        let stem = Conv::new(store, &format!("{name}.stem"), 3, c_in, base, 1, Init::FanIn, rng);
        let mut c = base;
        let mut stages = Vec::with_capacity(cfg.down_blocks);
        for s in 0..cfg.down_blocks {
            let down = DownResBlock::new(store, &format!("{name}.down{s}"), c, rng);
            c *= 2;
            let res = ResBlock::new(store, &format!("{name}.res{s}"), c, rng);
            stages.push((down, res));
        }
        let last = ResBlock::new(store, &format!("{name}.last"), c, rng);
        Encoder { stem, stages, last }
    }

    fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var, slope: f64) -> Result<Var> {
        let mut h = self.stem.forward(g, store, x)?;
        for (down, res) in &self.stages {
            h = down.forward(g, store, h, slope)?;
            h = res.forward(g, store, h, slope)?;
        }
        Ok(self.last.forward(g, store, h, slope)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DecoderLayer {
    /// Leaky rectifier, then a 4x4 stride-2 transpose convolution.
    Up(Conv),
    Res(ResBlock),
}

/// The two gate tensors of the boundary encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gates {
    pub mul: Var,
    pub add: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatNet {
    pub config: ModelConfig,
    flow: Encoder,
    boundary: Encoder,
    head: Conv,
    comp: Vec<ResBlock>,
    decoder: Vec<DecoderLayer>,
}

impl LatNet {
    fn build<T: Real>(config: ModelConfig, store: &mut ParamStore<T>, rng: &mut impl Rng) -> Self {
        let latent = config.latent_channels();
        let flow = Encoder::new(store, "flow", FLOW_CHANNELS, &config, rng);
        let boundary = Encoder::new(store, "boundary", 1, &config, rng);
        // Zero kernel with a (1, 0) bias: the gates start neutral.
        let head = Conv::new(store, "boundary.head", 3, latent, 2 * latent, 1, Init::Zero, rng);
        for (i, b) in store.get_mut(head.bias).value.data_mut().iter_mut().enumerate() {
            *b = if i < latent { T::one() } else { T::zero() };
        }
        let comp = (0..config.comp_blocks)
            .map(|i| ResBlock::new(store, &format!("comp.res{i}"), latent, rng))
            .collect();
        let mut decoder = Vec::new();
        let mut c = latent;
        for s in 0..config.down_blocks - 1 {
            decoder.push(DecoderLayer::Up(Conv::new_transpose(
                store,
                &format!("dec.up{s}"),
                4,
                c,
                c / 2,
                2,
                Init::FanIn,
                rng,
            )));
            c /= 2;
            decoder.push(DecoderLayer::Res(ResBlock::new(store, &format!("dec.res{s}a"), c, rng)));
            decoder.push(DecoderLayer::Res(ResBlock::new(store, &format!("dec.res{s}b"), c, rng)));
        }
        decoder.push(DecoderLayer::Up(Conv::new_transpose(
            store,
            "dec.out",
            4,
            c,
            FLOW_CHANNELS,
            2,
            Init::FanIn,
            rng,
        )));
        LatNet {
            config,
            flow,
            boundary,
            head,
            comp,
            decoder,
        }
    }
}

/// A network layout together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub net: LatNet,
    pub params: ParamStore<T>,
}

/// Frames and latents of a rollout; index 0 is the encoded initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub frames: Vec<Tensor<T>>,
    pub latents: Vec<Tensor<T>>,
}

/// Result of a partial decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<T> {
    pub values: Tensor<T>,
    /// Scalars held by every intermediate tensor created on the way.
    pub materialized: usize,
}

fn leaky<T: Real>(t: &Tensor<T>, slope: f64) -> Tensor<T> {
    let s = T::from_f64(slope);
    t.map(|v| if v > T::zero() { v } else { v * s })
}

fn add_bias<T: Real>(t: &mut Tensor<T>, b: &Tensor<T>) {
    let c = b.len();
    for (i, v) in t.data_mut().iter_mut().enumerate() {
        *v += b.data()[i % c];
    }
}

impl<T: Real> Model<T> {
    /// Fresh parameters drawn from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = LatNet::build(config, &mut params, &mut rng);
        Ok(Model { net, params })
    }

    /// Attaches existing parameters, checking names and shapes.
    pub fn with_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        model.params.load_values(&params)?;
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.net.config
    }

    fn slope(&self) -> f64 {
        self.net.config.leaky_slope
    }

    fn check_input(&self, g: &Graph<T>, x: Var, channels: usize) -> Result<()> {
        let (_, h, w, c) = g.value(x).dims4()?;
        if c != channels {
            return Err(ModelError::Config(format!("expected {channels} input channels, got {c}")));
        }
        self.net.config.check_grid(h, w)
    }

    /// `(n, nx, ny, 9) -> (n, nx/2^d, ny/2^d, latent)`.
    pub fn encode_flow(&self, g: &mut Graph<T>, f: Var) -> Result<Var> {
        self.check_input(g, f, FLOW_CHANNELS)?;
        self.net.flow.forward(g, &self.params, f, self.slope())
    }

    /// `(n, nx, ny, 1)` solid mask to the multiplicative and additive gates.
    pub fn encode_boundary(&self, g: &mut Graph<T>, mask: Var) -> Result<Gates> {
        self.check_input(g, mask, 1)?;
        let h = self.net.boundary.forward(g, &self.params, mask, self.slope())?;
        let both = self.net.head.forward(g, &self.params, h)?;
        let c = self.net.config.latent_channels();
        Ok(Gates {
            mul: g.slice_channels(both, 0, c)?,
            add: g.slice_channels(both, c, c)?,
        })
    }

    /// `state * mul + add`, elementwise.
    pub fn apply_boundary(g: &mut Graph<T>, state: Var, gates: Gates) -> Result<Var> {
        let m = g.mul(state, gates.mul)?;
        Ok(g.add(m, gates.add)?)
    }

    /// One latent time step: gates first, then the residual dynamics.
    pub fn compress_step(&self, g: &mut Graph<T>, state: Var, gates: Gates) -> Result<Var> {
        let mut h = Self::apply_boundary(g, state, gates)?;
        for block in &self.net.comp {
            h = block.forward(g, &self.params, h, self.slope())?;
        }
        Ok(h)
    }

    /// Latent back to a 9-channel distribution field. The last layer is
    /// linear.
    pub fn decode(&self, g: &mut Graph<T>, state: Var) -> Result<Var> {
        let mut h = state;
        for layer in &self.net.decoder {
            h = match layer {
                DecoderLayer::Up(conv) => {
                    let a = g.leaky_relu(h, self.slope())?;
                    conv.forward(g, &self.params, a)?
                }
                DecoderLayer::Res(block) => block.forward(g, &self.params, h, self.slope())?,
            };
        }
        Ok(h)
    }

    /// Gate tensors for a mask, computed once per geometry.
    pub fn gates(&self, mask: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut g = Graph::new();
        let m = g.input(mask.clone())?;
        let gates = self.encode_boundary(&mut g, m)?;
        Ok((g.value(gates.mul).clone(), g.value(gates.add).clone()))
    }

    pub fn encode_tensor(&self, f: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let x = g.input(f.clone())?;
        let y = self.encode_flow(&mut g, x)?;
        Ok(g.value(y).clone())
    }

    pub fn step_tensor(&self, state: &Tensor<T>, mul: &Tensor<T>, add: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let s = g.input(state.clone())?;
        let gates = Gates {
            mul: g.input(mul.clone())?,
            add: g.input(add.clone())?,
        };
        let y = self.compress_step(&mut g, s, gates)?;
        Ok(g.value(y).clone())
    }

    pub fn decode_tensor(&self, state: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let s = g.input(state.clone())?;
        let y = self.decode(&mut g, s)?;
        Ok(g.value(y).clone())
    }

    /// Encodes `f0` once and advances the latent `steps` times, decoding
    /// every state. Each step builds a fresh graph, so memory stays flat.
    pub fn rollout(&self, f0: &Tensor<T>, mask: &Tensor<T>, steps: usize) -> Result<Rollout<T>> {
        let (mul, add) = self.gates(mask)?;
        let mut state = self.encode_tensor(f0)?;
        let mut out = Rollout {
            frames: vec![self.decode_tensor(&state)?],
            latents: vec![state.clone()],
        };
        for step in 1..=steps {
            let diverged = |e: ModelError| match e {
                ModelError::Tensor(source) => ModelError::Diverged { step, source },
                other => other,
            };
            state = self.step_tensor(&state, &mul, &add).map_err(diverged)?;
            out.frames.push(self.decode_tensor(&state).map_err(diverged)?);
            out.latents.push(state.clone());
        }
        Ok(out)
    }

    /// Decodes only `region` of the output grid, evaluating each layer on
    /// the part of its output that the region depends on. Agrees with
    /// [`Model::decode_tensor`] cell for cell.
    pub fn decode_patch(&self, latent: &Tensor<T>, region: Rect) -> Result<Patch<T>> {
        let (_, lh, lw, _) = latent.dims4()?;
        let slope = self.slope();

        // Grid size after each layer.
        let mut dims = vec![(lh, lw)];
        for layer in &self.net.decoder {
            let (h, w) = *dims.last().unwrap();
            dims.push(match layer {
                DecoderLayer::Up(c) => (h * c.stride, w * c.stride),
                DecoderLayer::Res(_) => (h, w),
            });
        }
        let (oh, ow) = *dims.last().unwrap();
        if region.height() == 0 || region.width() == 0 || !Rect::full(oh, ow).contains_rect(&region) {
            return Err(ModelError::Region { region, h: oh, w: ow });
        }

        // Rectangle each layer must produce, walking back from the region.
        let mut need = vec![region];
        for (i, layer) in self.net.decoder.iter().enumerate().rev() {
            let out = *need.last().unwrap();
            let (h, w) = dims[i + 1];
            need.push(match layer {
                DecoderLayer::Up(c) => ConvGeometry::same(h, w, c.size, c.size, c.stride).small_footprint(&out),
                DecoderLayer::Res(_) => out.dilate(2, h, w),
            });
        }
        need.reverse();

        let mut materialized = 0;
        let mut win = need[0];
        let mut x = latent.crop(win.h0, win.h1, win.w0, win.w1)?;
        materialized += x.len();
        for (i, layer) in self.net.decoder.iter().enumerate() {
            let out = need[i + 1];
            let (h, w) = dims[i];
            let p = |id| &self.params.get(id).value;
            x = match layer {
                DecoderLayer::Up(c) => {
                    let a = leaky(&x, slope);
                    let mut y = conv_transpose2d_region(&a, &win, (h, w), p(c.kernel), c.stride, &out)?;
                    add_bias(&mut y, p(c.bias));
                    materialized += a.len() + y.len();
                    y
                }
                DecoderLayer::Res(b) => {
                    let mid = out.dilate(1, h, w);
                    let a = leaky(&x, slope);
                    let mut m = conv2d_region(&a, &win, (h, w), p(b.c1.kernel), 1, &mid)?;
                    add_bias(&mut m, p(b.c1.bias));
                    let m2 = leaky(&m, slope);
                    let mut r = conv2d_region(&m2, &mid, (h, w), p(b.c2.kernel), 1, &out)?;
                    add_bias(&mut r, p(b.c2.bias));
                    let skip = x.crop(out.h0 - win.h0, out.h1 - win.h0, out.w0 - win.w0, out.w1 - win.w0)?;
                    let mut y = skip;
                    for (v, &d) in y.data_mut().iter_mut().zip(r.data()) {
                        *v = *v + d;
                    }
                    materialized += a.len() + m.len() + m2.len() + r.len() + y.len();
                    y
                }
            };
            win = out;
        }
        Ok(Patch { values: x, materialized })
    }
}
