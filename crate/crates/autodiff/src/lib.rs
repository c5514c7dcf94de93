//! A small dense tensor engine with tape-based reverse-mode
//! differentiation, covering what a convolutional encoder/decoder needs:
//! strided and transpose convolution, elementwise arithmetic, a leaky
//! rectifier, MSE and gradient-difference losses, and Adam.

pub mod adam;
pub mod blocks;
pub mod checkpoint;
pub mod conv;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod param;
pub mod real;
pub mod tensor;

pub use adam::Adam;
pub use blocks::{Conv, DownResBlock, Init, ResBlock};
pub use checkpoint::Checkpoint;
pub use conv::{ConvGeometry, Rect};
pub use error::{Result, TensorError};
pub use graph::{Gradients, Graph, Var};
pub use param::{ParamId, ParamStore, Parameter};
pub use real::Real;
pub use tensor::Tensor;
