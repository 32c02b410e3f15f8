//! Synthetic diffusion cascades: source sampling, SI / SIR / GLT simulation,
//! equal-count snapshot partitioning and train/test bundles.

mod dataset;
mod io;
mod sim;

pub use dataset::{build_dataset, filter_valid, partition_snapshots, DatasetBundle};
pub use io::{dataset_from_str, dataset_to_string, read_dataset, write_dataset, DatasetHeader};
pub use sim::{sample_sources, simulate, simulate_glt, simulate_si, simulate_sir};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mechanism {
    Si,
    Sir,
    Glt,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Si => "SI",
            Mechanism::Sir => "SIR",
            Mechanism::Glt => "GLT",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SI" => Ok(Mechanism::Si),
            "SIR" => Ok(Mechanism::Sir),
            "GLT" => Ok(Mechanism::Glt),
            other => Err(Error::Config(format!("unknown mechanism {other:?}"))),
        }
    }
}

/// How many seeds a cascade starts from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceCount {
    /// `ceil(ratio * n)` sources.
    Ratio(f64),
    Fixed(usize),
}

impl SourceCount {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            // the epsilon keeps e.g. 0.07 * 100 from rounding up to 8
            SourceCount::Ratio(r) => (r * n as f64 - 1e-9).ceil().max(0.0) as usize,
            SourceCount::Fixed(k) => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mechanism: Mechanism,
    pub sources: SourceCount,
    /// Number of snapshot groups; the last one is the propagation result.
    pub snapshots: usize,
    pub min_coverage: f64,
    /// GLT threshold base `k`, threshold `k^degree`.
    pub glt_base: f64,
    /// SIR per-round recovery probability.
    pub sir_recovery: f64,
    /// Round cap; `None` means `10 * n`.
    pub max_steps: Option<usize>,
    /// Mark sources as infected in every snapshot and in the result.
    pub include_sources: bool,
    pub block_size: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mechanism: Mechanism::Si,
            sources: SourceCount::Ratio(0.05),
            snapshots: 4,
            min_coverage: 0.4,
            glt_base: 0.5,
            sir_recovery: 0.1,
            max_steps: None,
            include_sources: false,
            block_size: 32,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.min_coverage > 0.0 && self.min_coverage < 1.0) {
            return bad("min_coverage must lie in (0, 1)");
        }
        if !(self.glt_base > 0.0 && self.glt_base < 1.0) {
            return bad("glt_base must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.sir_recovery) {
            return bad("sir_recovery must be a probability");
        }
        if self.snapshots < 2 {
            return bad("need at least 2 snapshot groups");
        }
        if self.block_size == 0 {
            return bad("block_size must be positive");
        }
        if let SourceCount::Ratio(r) = self.sources {
            if !(r > 0.0 && r < 1.0) {
                return bad("source ratio must lie in (0, 1)");
            }
        }
        Ok(())
    }

    pub fn max_steps_for(&self, n: usize) -> usize {
        self.max_steps.unwrap_or(10 * n)
    }
}

/// One realized diffusion run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cascade {
    pub mechanism: Mechanism,
    pub seed: u64,
    /// Binary source indicator, length `n`.
    pub sources: Vec<bool>,
    /// Non-source infections as `(node, round)`, sorted by `(round, node)`.
    pub infection_order: Vec<(usize, usize)>,
    /// Cumulative intermediate snapshots `Y_1 .. Y_{T-1}`.
    pub snapshots: Vec<Vec<bool>>,
    /// Final cumulative state `Y_T`.
    pub result: Vec<bool>,
}

impl Cascade {
    pub fn node_count(&self) -> usize {
        self.sources.len()
    }

    pub fn source_ids(&self) -> Vec<usize> {
        ones(&self.sources)
    }

    pub fn source_count(&self) -> usize {
        self.sources.iter().filter(|&&b| b).count()
    }

    /// Sources plus non-source infections.
    pub fn infected_total(&self) -> usize {
        self.source_count() + self.infection_order.len()
    }

    pub fn source_vector(&self) -> Vec<f64> {
        to_f64(&self.sources)
    }

    pub fn result_vector(&self) -> Vec<f64> {
        to_f64(&self.result)
    }

    pub fn snapshot_vectors(&self) -> Vec<Vec<f64>> {
        self.snapshots.iter().map(|s| to_f64(s)).collect()
    }
}

pub fn ones(v: &[bool]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

pub fn to_f64(v: &[bool]) -> Vec<f64> {
    v.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

pub fn indicator(n: usize, ids: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &i in ids {
        v[i] = true;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_count_rounding() {
        assert_eq!(SourceCount::Ratio(0.05).resolve(198), 10);
        assert_eq!(SourceCount::Ratio(0.05).resolve(200), 10);
        assert_eq!(SourceCount::Ratio(0.07).resolve(100), 7);
        assert_eq!(SourceCount::Ratio(0.5).resolve(1), 1);
        assert_eq!(SourceCount::Fixed(3).resolve(50), 3);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = SimConfig {
            snapshots: 1,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            glt_base: 1.0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mechanism_parse() {
        assert_eq!("sir".parse::<Mechanism>().unwrap(), Mechanism::Sir);
        assert!("ic".parse::<Mechanism>().is_err());
    }
}
