use serde::{Deserialize, Serialize};

use crate::autodiff::OptimizerKind;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Latent dimension `K`.
    pub latent_dim: usize,
    /// Hidden width of the encoder and generator.
    pub hidden: usize,
    /// Node feature width inside the ODE.
    pub prop_dim: usize,
    /// Graph convolutions composed inside the ODE vector field.
    pub gcn_layers: usize,
    /// Number of unit-length RK4 steps.
    pub rk4_steps: usize,
    /// Hidden width of the three-layer readout.
    pub readout_hidden: usize,
    /// L2 coefficient on every parameter.
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Intermediate snapshots fed as conditioning; 0 drops the dynamics.
    pub snapshot_inputs: usize,
    pub optimizer: OptimizerKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            hidden: 128,
            prop_dim: 128,
            gcn_layers: 2,
            rk4_steps: 2,
            readout_hidden: 128,
            l2: 1e-4,
            lr: 0.03,
            epochs: 100,
            snapshot_inputs: 3,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("latent_dim", self.latent_dim),
            ("hidden", self.hidden),
            ("prop_dim", self.prop_dim),
            ("gcn_layers", self.gcn_layers),
            ("rk4_steps", self.rk4_steps),
            ("readout_hidden", self.readout_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        Ok(())
    }
}
