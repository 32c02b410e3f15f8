//! Classification scores, Average Error Distance and results tables.

mod assignment;
mod table;

pub use assignment::{assignment_min_cost, Assignment};
pub use table::{results_csv, ResultRow, RESULTS_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Two-class macro precision, recall, F1 and accuracy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Macro average over the classes {non-source, source}; empty denominators count as 0.
pub fn macro_scores(truth: &[bool], pred: &[bool]) -> Result<Scores> {
    if truth.len() != pred.len() {
        return Err(Error::Length {
            left: truth.len(),
            right: pred.len(),
        });
    }
    let mut tp = [0usize; 2];
    let mut predicted = [0usize; 2];
    let mut actual = [0usize; 2];
    for (&t, &p) in truth.iter().zip(pred) {
        actual[t as usize] += 1;
        predicted[p as usize] += 1;
        if t == p {
            tp[t as usize] += 1;
        }
    }
    let mut out = Scores::default();
    for c in 0..2 {
        let p = ratio(tp[c], predicted[c]);
        let r = ratio(tp[c], actual[c]);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        out.precision += p / 2.0;
        out.recall += r / 2.0;
        out.f1 += f / 2.0;
    }
    out.accuracy = ratio(tp[0] + tp[1], truth.len());
    Ok(out)
}

/// Indices of the `k` highest probabilities, ties to the lower id.
pub fn top_k(probs: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > probs.len() {
        return Err(Error::TopKTooLarge { k, n: probs.len() });
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Average Error Distance between the true sources and the top-`K` predictions.
///
/// Distances are BFS hop counts over the undirected view of `g`; an unreachable
/// pair costs `n`.
pub fn aed(g: &Graph, truth: &[usize], probs: &[f64]) -> Result<f64> {
    let k = truth.len();
    if k == 0 {
        return Err(Error::Config("AED needs at least one true source".into()));
    }
    if probs.len() != g.node_count() {
        return Err(Error::Length {
            left: probs.len(),
            right: g.node_count(),
        });
    }
    let predicted = top_k(probs, k)?;
    let mut cost = Vec::with_capacity(k);
    for &s in truth {
        let dist = g.bfs_distances(s)?;
        cost.push(predicted.iter().map(|&p| dist[p] as f64).collect::<Vec<_>>());
    }
    Ok(assignment_min_cost(&cost)?.cost / k as f64)
}

/// Metrics for a single test cascade.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CascadeMetrics {
    #[serde(flatten)]
    pub scores: Scores,
    pub aed: f64,
}

impl CascadeMetrics {
    pub fn evaluate(g: &Graph, truth: &[bool], pred: &[bool], probs: &[f64]) -> Result<Self> {
        let ids: Vec<usize> = truth.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i).collect();
        Ok(Self {
            scores: macro_scores(truth, pred)?,
            aed: aed(g, &ids, probs)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub aed: f64,
    pub per_cascade: Vec<CascadeMetrics>,
}

impl MetricsReport {
    /// Means over the given cascades.
    pub fn from_cascades(per_cascade: Vec<CascadeMetrics>) -> Self {
        let n = per_cascade.len().max(1) as f64;
        let mean = |f: fn(&CascadeMetrics) -> f64| per_cascade.iter().map(f).sum::<f64>() / n;
        Self {
            macro_precision: mean(|m| m.scores.precision),
            macro_recall: mean(|m| m.scores.recall),
            macro_f1: mean(|m| m.scores.f1),
            accuracy: mean(|m| m.scores.accuracy),
            aed: mean(|m| m.aed),
            per_cascade,
        }
    }
}
