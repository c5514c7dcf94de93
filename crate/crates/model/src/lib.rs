//! The latent-space surrogate: a flow encoder, a boundary encoder whose
//! output gates the latent state, residual latent dynamics, and a decoder
//! that can also reconstruct sub-regions.

pub mod config;
pub mod convert;
pub mod error;
pub mod net;

pub use config::{ModelConfig, FLOW_CHANNELS};
pub use error::{ModelError, Result};
pub use net::{Gates, LatNet, Model, Patch, Rollout};
