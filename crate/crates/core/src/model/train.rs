use std::sync::Arc;

use rand::seq::SliceRandom;

use super::batch::Batch;
use super::config::ModelConfig;
use super::network::Model;
use crate::autodiff::{Optimizer, Tape};
use crate::cascade::DatasetBundle;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng;

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: Model,
    /// Mean total loss over blocks, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean `[kl, re, fp, reg]` per epoch.
    pub epoch_terms: Vec<[f64; 4]>,
}

/// Fit a freshly initialized model on the training blocks of `bundle`.
pub fn train(
    bundle: &DatasetBundle,
    adj: &Arc<NormalizedAdjacency>,
    config: &ModelConfig,
    seed: u64,
) -> Result<TrainReport> {
    let model = Model::init(config, bundle.node_count, &mut rng::stream(seed, "init", 0))?;
    train_from(model, bundle, adj, seed, |_, _| {})
}

/// Continue training `model`; `on_epoch(epoch, mean_loss)` runs after each epoch.
pub fn train_from(
    mut model: Model,
    bundle: &DatasetBundle,
    adj: &Arc<NormalizedAdjacency>,
    seed: u64,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    let cfg = model.config.clone();
    let blocks: Vec<Batch> = bundle
        .blocks()
        .into_iter()
        .map(|b| Batch::from_cascades(b, cfg.snapshot_inputs))
        .collect::<Result<_>>()?;
    if blocks.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let optimizer = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut noise_rng = rng::stream(seed, "reparam", 0);
    let mut order_rng = rng::stream(seed, "block-order", 0);
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut epoch_terms = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        let mut terms = [0.0; 4];
        order.shuffle(&mut order_rng);
        for &block in &order {
            let batch = &blocks[block];
            let eps = model.sample_noise(batch.len(), &mut noise_rng);
            let tape = Tape::new();
            let bound = model.params.bind(&tape, true);
            let loss = model
                .training_loss(&tape, &bound, adj, batch, Some(&eps))
                .map_err(|e| match e {
                    Error::NonFinite { .. } => Error::TrainingDiverged { epoch, block },
                    other => other,
                })?;
            let value = loss.total.item();
            if !value.is_finite() {
                return Err(Error::TrainingDiverged { epoch, block });
            }
            total += value;
            for (acc, v) in terms.iter_mut().zip([loss.kl, loss.re, loss.fp, loss.reg]) {
                *acc += v.item();
            }
            let mut grads = tape.backward(loss.total)?;
            model.params.store_grads(&bound, &mut grads);
            optimizer.step(&mut model.params)?;
        }
        let count = blocks.len() as f64;
        let mean = total / count;
        epoch_losses.push(mean);
        epoch_terms.push(terms.map(|t| t / count));
        on_epoch(epoch, mean);
    }
    Ok(TrainReport {
        model,
        epoch_losses,
        epoch_terms,
    })
}
