//! Diffusion source localization on graphs.
//!
//! The pipeline has four stages:
//!
//! 1. [`cascade`] simulates SI / SIR / GLT cascades on a [`graph::Graph`] and
//!    cuts them into equal-count snapshot series.
//! 2. [`model`] trains a conditional variational source model coupled with a
//!    graph neural ODE forward propagator, on top of the small reverse-mode
//!    engine in [`autodiff`].
//! 3. [`inference`] matches an observed result against archived training
//!    blocks, seeds a latent prior and refines the source estimate by
//!    gradient descent.
//! 4. [`metrics`] scores predictions (macro P/R/F1, accuracy, AED) and
//!    [`baselines`] provides cheap reference localizers.
//!
//! The [`cli`] module wires everything into the `pdsl` binary.

pub mod autodiff;
pub mod baselines;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
