//! Training loss terms, on the tape and as plain functions.

use crate::autodiff::Var;
use crate::error::{Error, Result};

/// Probability clamp used inside Bernoulli log-likelihoods.
pub const PROB_EPS: f64 = 1e-7;

/// Gaussian KL to the standard normal, averaged over latent dims (and rows).
pub fn kl<'t>(mu: Var<'t>, logvar: Var<'t>) -> Result<Var<'t>> {
    // ½(−lv + e^lv + μ² − 1)
    let inner = Var::lincomb(&[(logvar, -1.0), (logvar.exp()?, 1.0), (mu.square()?, 1.0)])?;
    inner.add_scalar(-1.0)?.mean()?.scale(0.5)
}

/// Bernoulli negative log-likelihood of `targets` under `probs`, summed over
/// nodes and averaged over rows.
pub fn reconstruction<'t>(targets: Var<'t>, probs: Var<'t>) -> Result<Var<'t>> {
    let rows = probs.shape().0 as f64;
    let p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)?;
    let pos = targets.mul(p.log()?)?;
    let neg = targets.rsub_scalar(1.0)?.mul(p.rsub_scalar(1.0)?.log()?)?;
    Var::lincomb(&[(pos, 1.0), (neg, 1.0)])?
        .sum()?
        .scale(-1.0 / rows)
}

/// Mean squared error over every entry.
pub fn forward_mse<'t>(target: Var<'t>, predicted: Var<'t>) -> Result<Var<'t>> {
    target.sub(predicted)?.square()?.mean()
}

/// `Σ ‖W‖²` over the given parameters.
pub fn l2<'t>(params: &[Var<'t>]) -> Result<Var<'t>> {
    let norms: Vec<(Var<'t>, f64)> = params
        .iter()
        .map(|p| Ok((p.square()?.sum()?, 1.0)))
        .collect::<Result<_>>()?;
    Var::lincomb(&norms)
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Length { left: a, right: b });
    }
    Ok(())
}

/// Plain-value KL, mean over dims of `½(−lv + e^lv + μ² − 1)`.
pub fn kl_value(mu: &[f64], logvar: &[f64]) -> Result<f64> {
    same_len(mu.len(), logvar.len())?;
    let total: f64 = mu
        .iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (-lv + lv.exp() + m * m - 1.0))
        .sum();
    Ok(total / mu.len() as f64)
}

/// Plain-value reconstruction loss over sample rows.
pub fn reconstruction_value(targets: &[Vec<f64>], probs: &[Vec<f64>]) -> Result<f64> {
    same_len(targets.len(), probs.len())?;
    let mut total = 0.0;
    for (s, p) in targets.iter().zip(probs) {
        same_len(s.len(), p.len())?;
        for (&si, &pi) in s.iter().zip(p) {
            let pi = pi.clamp(PROB_EPS, 1.0 - PROB_EPS);
            total -= si * pi.ln() + (1.0 - si) * (1.0 - pi).ln();
        }
    }
    Ok(total / targets.len() as f64)
}

pub fn mse_value(target: &[f64], predicted: &[f64]) -> Result<f64> {
    same_len(target.len(), predicted.len())?;
    let sum: f64 = target
        .iter()
        .zip(predicted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / target.len() as f64)
}
