//! D2Q9 lattice Boltzmann solver with LBGK collision and half-way
//! bounce-back, the flow metrics used to score surrogate rollouts, and the
//! random-obstacle dataset generator.

pub mod dataset;
pub mod error;
pub mod keyvalue;
pub mod lattice;
pub mod metrics;
pub mod scene;
pub mod snapshot;
pub mod solver;
pub mod state;

pub use error::{LbmError, Result};
pub use lattice::{equilibrium, VelocitySet, D2Q9, Q};
pub use metrics::{divergence_field, drag, flux_average, mean_abs_divergence, mlups};
pub use solver::{apply_inlet_outlet, collide, macroscopics, step, stream, Simulation};
pub use state::{BoundaryMask, BoundaryMode, LatticeState, MacroFields, SolverConfig};
