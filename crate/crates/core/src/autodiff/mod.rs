//! A small dense-matrix reverse-mode differentiation engine.
//!
//! Every forward op appends a node to a [`Tape`]; [`Tape::backward`] walks the
//! nodes in reverse and accumulates adjoints. Values are `f64` matrices and
//! every op checks its output for NaN/Inf, failing with the op name.

mod ops;
mod optim;
mod params;
mod tape;

pub use optim::{Optimizer, OptimizerKind};
pub use params::{glorot_uniform, BoundParams, ParamSet};

/// On-disk parameter layout, shared with model checkpoints.
pub mod params_file {
    pub use super::params::{ParamFile, ParamRecord};
}
pub use tape::{Gradients, Tape, Var};
