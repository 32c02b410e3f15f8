use std::sync::Arc;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::batch::Batch;
use super::config::ModelConfig;
use super::loss;
use super::ode;
use crate::autodiff::{glorot_uniform, BoundParams, ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng::Rng;

/// Trained (or freshly initialized) weights for one graph size.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub node_count: usize,
    pub params: ParamSet,
}

/// Encoder output for a batch.
#[derive(Clone, Copy, Debug)]
pub struct LatentSample<'t> {
    pub mu: Var<'t>,
    pub logvar: Var<'t>,
    pub z: Var<'t>,
}

/// Loss components on the tape.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms<'t> {
    pub kl: Var<'t>,
    pub re: Var<'t>,
    pub fp: Var<'t>,
    pub reg: Var<'t>,
    pub total: Var<'t>,
}

fn affine<'t>(p: &BoundParams<'t>, x: Var<'t>, w: &str, b: &str) -> Result<Var<'t>> {
    x.matmul(p.get(w))?.add(p.get(b))
}

impl Model {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &ModelConfig, node_count: usize, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let n = node_count;
        let c = config.snapshot_inputs;
        let (h, k, d, r) = (
            config.hidden,
            config.latent_dim,
            config.prop_dim,
            config.readout_hidden,
        );
        let mut params = ParamSet::new();
        let mut dense = |name: &str, rows: usize, cols: usize| -> Result<()> {
            params.insert(format!("{name}.w"), glorot_uniform(rows, cols, rng))?;
            params.insert(format!("{name}.b"), Array2::zeros((1, cols)))
        };
        dense("enc1", (c + 1) * n, h)?;
        dense("enc2", h, 2 * k)?;
        dense("gen1", k + c * n, h)?;
        dense("gen2", h, n)?;
        dense("read1", d, r)?;
        dense("read2", r, r)?;
        dense("read3", r, 1)?;
        params.insert("prop.in", glorot_uniform(c + 1, d, rng))?;
        for l in 0..config.gcn_layers {
            params.insert(format!("prop.gcn{l}"), glorot_uniform(d, d, rng))?;
        }
        Ok(Self {
            config: config.clone(),
            node_count,
            params,
        })
    }

    /// Check that stored parameter shapes match the configuration and `n`.
    pub fn validate_shapes(&self) -> Result<()> {
        let fresh = Model::init(&self.config, self.node_count, &mut crate::rng::seeded(0))?;
        let expect: Vec<(&str, (usize, usize))> =
            fresh.params.values().map(|(n, v)| (n, v.dim())).collect();
        let got: Vec<(&str, (usize, usize))> =
            self.params.values().map(|(n, v)| (n, v.dim())).collect();
        if expect != got {
            return Err(Error::Checkpoint(format!(
                "parameter layout does not match a {}-node model with this config",
                self.node_count
            )));
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.node_count != self.node_count {
            return Err(Error::Length {
                left: batch.node_count,
                right: self.node_count,
            });
        }
        if batch.snapshot_inputs() != self.config.snapshot_inputs {
            return Err(Error::Config(format!(
                "batch carries {} snapshots, model expects {}",
                batch.snapshot_inputs(),
                self.config.snapshot_inputs
            )));
        }
        Ok(())
    }

    /// Posterior `q(z | s, Y_t)`; `eps = None` draws nothing and returns `z = mu`.
    pub fn encode<'t>(
        &self,
        p: &BoundParams<'t>,
        sources: Var<'t>,
        conditioning: Var<'t>,
        eps: Option<Var<'t>>,
    ) -> Result<LatentSample<'t>> {
        let k = self.config.latent_dim;
        let input = if conditioning.shape().1 == 0 {
            sources
        } else {
            Var::concat_cols(&[sources, conditioning])?
        };
        let hidden = affine(p, input, "enc1.w", "enc1.b")?.relu()?;
        let out = affine(p, hidden, "enc2.w", "enc2.b")?;
        let mu = out.slice_cols(0, k)?;
        let logvar = out.slice_cols(k, 2 * k)?;
        let z = match eps {
            Some(eps) => mu.add(logvar.scale(0.5)?.exp()?.mul(eps)?)?,
            None => mu,
        };
        Ok(LatentSample { mu, logvar, z })
    }

    /// Candidate source probabilities `p(s | Y_t, z)`, `B x n`.
    pub fn generate<'t>(
        &self,
        p: &BoundParams<'t>,
        conditioning: Var<'t>,
        z: Var<'t>,
    ) -> Result<Var<'t>> {
        let input = if conditioning.shape().1 == 0 {
            z
        } else {
            Var::concat_cols(&[z, conditioning])?
        };
        let hidden = affine(p, input, "gen1.w", "gen1.b")?.relu()?;
        affine(p, hidden, "gen2.w", "gen2.b")?.sigmoid()
    }

    /// Predicted final infection probabilities, `B x n`.
    ///
    /// Node features `[s*_v, Y_1v, …, Y_cv]` are embedded, evolved by
    /// `dH/dt = tanh(Â^L H W_1 … W_L)` over `rk4_steps` unit RK4 steps and
    /// read out row-wise by a three-layer perceptron.
    pub fn propagate<'t>(
        &self,
        p: &BoundParams<'t>,
        adj: &Arc<NormalizedAdjacency>,
        candidates: Var<'t>,
        node_features: Var<'t>,
    ) -> Result<Var<'t>> {
        let (b, n) = candidates.shape();
        if adj.node_count() != n {
            return Err(Error::shape(
                "propagate",
                format!("adjacency has {} nodes, candidates {n}", adj.node_count()),
            ));
        }
        let column = candidates.reshape(b * n, 1)?;
        let features = if node_features.shape().1 == 0 {
            column
        } else {
            Var::concat_cols(&[column, node_features])?
        };
        let h0 = features.matmul(p.get("prop.in"))?;

        let mut mixing = p.get("prop.gcn0");
        for l in 1..self.config.gcn_layers {
            mixing = mixing.matmul(p.get(&format!("prop.gcn{l}")))?;
        }
        let layers = self.config.gcn_layers;
        let field = |h: &Var<'t>| -> Result<Var<'t>> {
            let mut x = h.matmul(mixing)?;
            for _ in 0..layers {
                x = x.propagate(adj)?;
            }
            x.tanh()
        };
        let h_end = ode::rk4(h0, 1.0, self.config.rk4_steps, field)?;
        self.readout(p, h_end)?.reshape(b, n)
    }

    fn readout<'t>(&self, p: &BoundParams<'t>, h: Var<'t>) -> Result<Var<'t>> {
        let x = affine(p, h, "read1.w", "read1.b")?.tanh()?;
        let x = affine(p, x, "read2.w", "read2.b")?.tanh()?;
        affine(p, x, "read3.w", "read3.b")?.sigmoid()
    }

    /// Standard-normal reparameterization noise for a batch.
    pub fn sample_noise(&self, rows: usize, rng: &mut Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, self.config.latent_dim), || {
            StandardNormal.sample(rng)
        })
    }

    /// Full training objective for one batch; `eps = None` uses `z = mu`.
    pub fn training_loss<'t>(
        &self,
        tape: &'t Tape,
        p: &BoundParams<'t>,
        adj: &Arc<NormalizedAdjacency>,
        batch: &Batch,
        eps: Option<&Array2<f64>>,
    ) -> Result<LossTerms<'t>> {
        self.check_batch(batch)?;
        let sources = tape.constant(batch.sources.clone());
        let cond = tape.constant(batch.conditioning.clone());
        let node_features = tape.constant(batch.node_features.clone());
        let results = tape.constant(batch.results.clone());
        let eps = eps.map(|e| tape.constant(e.clone()));

        let latent = self.encode(p, sources, cond, eps)?;
        let candidates = self.generate(p, cond, latent.z)?;
        let predicted = self.propagate(p, adj, candidates, node_features)?;

        let kl = loss::kl(latent.mu, latent.logvar)?;
        let re = loss::reconstruction(sources, candidates)?;
        let fp = loss::forward_mse(results, predicted)?;
        let reg = loss::l2(p.vars())?.scale(self.config.l2)?;
        let total = Var::lincomb(&[(kl, 1.0), (re, 1.0), (fp, 1.0), (reg, 1.0)])?;
        Ok(LossTerms {
            kl,
            re,
            fp,
            reg,
            total,
        })
    }

    /// Posterior means for each source row against one conditioning, `S x K`.
    pub fn posterior_means(&self, batch: &Batch) -> Result<Array2<f64>> {
        self.check_batch(batch)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape, false);
        let latent = self.encode(
            &p,
            tape.constant(batch.sources.clone()),
            tape.constant(batch.conditioning.clone()),
            None,
        )?;
        Ok(latent.mu.value())
    }

    /// Generator output for each latent row against the batch conditioning.
    pub fn generate_values(&self, batch: &Batch, z: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_batch(batch)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape, false);
        let cond = tape.constant(batch.conditioning.clone());
        self.generate(&p, cond, tape.constant(z.clone()))
            .map(|v| v.value())
    }

    /// Forward propagation of `candidates` (`B x n`) for the batch observations.
    pub fn propagate_values(
        &self,
        adj: &Arc<NormalizedAdjacency>,
        batch: &Batch,
        candidates: &Array2<f64>,
    ) -> Result<Array2<f64>> {
        self.check_batch(batch)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape, false);
        let feats = tape.constant(batch.node_features.clone());
        self.propagate(&p, adj, tape.constant(candidates.clone()), feats)
            .map(|v| v.value())
    }
}
