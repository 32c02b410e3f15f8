use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::matching::{match_block, BlockDistance, MatchIndex, Representative};
use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::metrics::top_k;
use crate::model::loss::{forward_mse, PROB_EPS};
use crate::model::{Batch, Model};

/// Bounds applied to the candidate source probabilities during refinement.
pub const REFINE_MIN: f64 = 1e-6;
pub const REFINE_MAX: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub lr: f64,
    pub epochs: usize,
    pub threshold: f64,
    /// When set, predict exactly this many sources instead of thresholding.
    pub top_k: Option<usize>,
    pub distance: BlockDistance,
    pub representative: Representative,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            epochs: 15,
            threshold: 0.5,
            top_k: None,
            distance: BlockDistance::Wasserstein,
            representative: Representative::Mean,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("inference lr must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Posterior means `μ(s_j, Y_t)` for every source vector in `block`, one row each.
pub fn block_latents(model: &Model, index: &MatchIndex, block: usize, observed: &Batch) -> Result<Array2<f64>> {
    let b = index.block(block).ok_or(Error::EmptyIndex)?;
    if b.sources.is_empty() {
        return Err(Error::EmptyBlock(block));
    }
    model.posterior_means(&observed.with_sources(&b.sources)?)
}

/// Mean of the block's posterior means against the test observation.
pub fn aggregate_latent(model: &Model, index: &MatchIndex, block: usize, observed: &Batch) -> Result<Vec<f64>> {
    let means = block_latents(model, index, block, observed)?;
    Ok(means.mean_axis(Axis(0)).expect("non-empty block").to_vec())
}

/// Value and gradient of the refinement objective at candidate `s`.
///
/// `ln MSE(Y_T, propagate(s)) − logsumexp_j log p(s | Y_t, z_j)` with the
/// generator held fixed.
pub fn inference_loss(
    model: &Model,
    adj: &Arc<NormalizedAdjacency>,
    observed: &Batch,
    latents: &Array2<f64>,
    s: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = model.node_count;
    if s.len() != n {
        return Err(Error::Length { left: s.len(), right: n });
    }
    let (log_ratio, log_neg) = mixture_terms(model, observed, latents)?;

    let tape = Tape::new();
    let p = model.params.bind(&tape, false);
    let cand = tape.var(Array2::from_shape_vec((1, n), s.to_vec()).expect("row"));
    let feats = tape.constant(observed.node_features.clone());
    let predicted = model.propagate(&p, adj, cand, feats)?;
    let fit = forward_mse(tape.constant(observed.results.clone()), predicted)?.log()?;
    let loglik = cand.matmul(tape.constant(log_ratio))?.add(tape.constant(log_neg))?;
    let loss = fit.sub(loglik.logsumexp()?)?;
    let value = loss.item();
    let grads = tape.backward(loss)?;
    let g = grads.get(cand).ok_or_else(|| Error::MissingGradient("candidate sources".into()))?;
    Ok((value, g.iter().copied().collect()))
}

/// `(n x S)` log-odds and `(1 x S)` sum of `ln(1 − p)` per mixture component.
fn mixture_terms(model: &Model, observed: &Batch, latents: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let rows = vec![vec![0.0; model.node_count]; latents.nrows()];
    let probs = model
        .generate_values(&observed.with_sources(&rows)?, latents)?
        .mapv(|p| p.clamp(PROB_EPS, 1.0 - PROB_EPS));
    let log_ratio = probs.mapv(|p| p.ln() - (1.0 - p).ln()).reversed_axes();
    let log_neg = probs.mapv(|p| (1.0 - p).ln()).sum_axis(Axis(1)).insert_axis(Axis(0));
    Ok((log_ratio.as_standard_layout().into_owned(), log_neg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub probabilities: Vec<f64>,
    pub prediction: Vec<bool>,
    /// Objective value at the start of each refinement epoch.
    pub trace: Vec<f64>,
}

/// Generate an initial estimate from `z_bar` and descend the refinement objective.
pub fn refine(
    model: &Model,
    adj: &Arc<NormalizedAdjacency>,
    observed: &Batch,
    z_bar: &[f64],
    latents: &Array2<f64>,
    cfg: &InferenceConfig,
) -> Result<Refinement> {
    cfg.validate()?;
    let k = model.config.latent_dim;
    if z_bar.len() != k {
        return Err(Error::Length { left: z_bar.len(), right: k });
    }
    let z = Array2::from_shape_vec((1, k), z_bar.to_vec()).expect("row");
    let mut s: Vec<f64> = model
        .generate_values(observed, &z)?
        .iter()
        .map(|p| p.clamp(REFINE_MIN, REFINE_MAX))
        .collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (value, grad) = inference_loss(model, adj, observed, latents, &s).map_err(|e| match e {
            Error::NonFinite { .. } => Error::InferenceDiverged { epoch },
            other => other,
        })?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::InferenceDiverged { epoch });
        }
        trace.push(value);
        for (x, g) in s.iter_mut().zip(grad) {
            *x = (*x - cfg.lr * g).clamp(REFINE_MIN, REFINE_MAX);
        }
    }
    let prediction = match cfg.top_k {
        Some(k) => {
            let top = top_k(&s, k)?;
            let mut out = vec![false; s.len()];
            top.into_iter().for_each(|i| out[i] = true);
            out
        }
        None => s.iter().map(|&p| p >= cfg.threshold).collect(),
    };
    Ok(Refinement {
        probabilities: s,
        prediction,
        trace,
    })
}

/// One inference result per test cascade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub matched_block: usize,
    pub z_bar: Vec<f64>,
    #[serde(flatten)]
    pub refinement: Refinement,
}

/// Full inference for one observation: match, aggregate, refine.
pub fn infer_cascade(
    model: &Model,
    adj: &Arc<NormalizedAdjacency>,
    index: &MatchIndex,
    observed: &Batch,
    cfg: &InferenceConfig,
) -> Result<InferenceRecord> {
    let result = observed.results.row(0).to_vec();
    let block = match_block(index, &result, cfg.distance, cfg.representative)?;
    let latents = block_latents(model, index, block, observed)?;
    let z_bar: Array1<f64> = latents.mean_axis(Axis(0)).expect("non-empty block");
    let refinement = refine(model, adj, observed, z_bar.as_slice().expect("contiguous"), &latents, cfg)?;
    Ok(InferenceRecord {
        matched_block: block,
        z_bar: z_bar.to_vec(),
        refinement,
    })
}
