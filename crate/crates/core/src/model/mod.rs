//! The source model: a conditional variational encoder/generator pair for
//! candidate sources, and a graph neural ODE that maps candidate sources plus
//! observed snapshots to predicted final infection probabilities.

mod batch;
mod checkpoint;
mod config;
pub mod loss;
mod network;
pub mod ode;
mod train;

pub use batch::Batch;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::ModelConfig;
pub use network::{LatentSample, Model};
pub use train::{train, train_from, TrainReport};
