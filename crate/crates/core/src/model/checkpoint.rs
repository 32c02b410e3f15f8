//! Checkpoint files: parameter dump plus the configuration that produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::autodiff::ParamSet;
use crate::error::{Error, Result};

const FORMAT: &str = "pdsl-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    version: u32,
    pub manifest_hash: String,
    pub node_count: usize,
    pub config: ModelConfig,
    params: crate::autodiff::params_file::ParamFile,
}

impl Checkpoint {
    pub fn new(model: &Model, manifest_hash: &str) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            manifest_hash: manifest_hash.into(),
            node_count: model.node_count,
            config: model.config.clone(),
            params: model.params.to_file(),
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format != FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format {}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Version(self.version));
        }
        let model = Model {
            config: self.config,
            node_count: self.node_count,
            params: ParamSet::from_file(self.params)?,
        };
        model.validate_shapes()?;
        Ok(model)
    }
}

pub fn save_checkpoint(model: &Model, manifest_hash: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&Checkpoint::new(model, manifest_hash))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load a checkpoint and its manifest hash, rejecting a node count other than `n`.
pub fn load_checkpoint(path: impl AsRef<Path>, n: usize) -> Result<(Model, String)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    let hash = ckpt.manifest_hash.clone();
    let model = ckpt.into_model()?;
    if model.node_count != n {
        return Err(Error::Checkpoint(format!(
            "checkpoint was trained for {} nodes, graph has {n}",
            model.node_count
        )));
    }
    Ok((model, hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn round_trip_and_shape_guard() {
        let cfg = ModelConfig {
            latent_dim: 3,
            hidden: 5,
            prop_dim: 4,
            readout_hidden: 4,
            ..ModelConfig::default()
        };
        let model = Model::init(&cfg, 7, &mut seeded(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_checkpoint(&model, "h", &path).unwrap();
        let (back, hash) = load_checkpoint(&path, 7).unwrap();
        assert_eq!(back, Model { params: back.params.clone(), ..model.clone() });
        assert_eq!(hash, "h");
        for ((_, a), (_, b)) in model.params.values().zip(back.params.values()) {
            assert_eq!(a, b);
        }
        assert!(matches!(load_checkpoint(&path, 8), Err(Error::Checkpoint(_))));
    }
}
