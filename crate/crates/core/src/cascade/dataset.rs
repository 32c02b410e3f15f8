use rand::seq::SliceRandom;

use super::{sample_sources, simulate, Cascade, SimConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Attempts allowed per requested cascade before giving up.
const RETRIES_PER_CASCADE: usize = 50;

/// True iff sources plus non-source infections cover at least
/// `min_coverage` of the graph.
pub fn filter_valid(c: &Cascade, cfg: &SimConfig) -> bool {
    let needed = cfg.min_coverage * c.node_count() as f64;
    c.infected_total() as f64 >= needed - 1e-9
}

/// Cut the non-source infections (already in `(round, node)` order) into `t`
/// equal-count groups, remainder in the last group, and fill the cumulative
/// snapshots `Y_1 .. Y_{t-1}` plus the result `Y_t`.
pub fn partition_snapshots(mut c: Cascade, t: usize) -> Result<Cascade> {
    if t < 2 {
        return Err(Error::Config("need at least 2 snapshot groups".into()));
    }
    let m = c.infection_order.len();
    if m < t {
        return Err(Error::CascadeTooSmall {
            infections: m,
            parts: t,
        });
    }
    let group = m / t;
    let n = c.node_count();
    let mut state = vec![false; n];
    let mut snapshots = Vec::with_capacity(t - 1);
    for (i, &(v, _)) in c.infection_order.iter().enumerate() {
        state[v] = true;
        let done = i + 1;
        if done % group == 0 && done / group < t {
            snapshots.push(state.clone());
        }
    }
    c.snapshots = snapshots;
    c.result = state;
    Ok(c)
}

fn mark_sources(mut c: Cascade) -> Cascade {
    for (i, &s) in c.sources.iter().enumerate() {
        if s {
            for snap in c.snapshots.iter_mut() {
                snap[i] = true;
            }
            c.result[i] = true;
        }
    }
    c
}

/// Train/test cascades generated on one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub node_count: usize,
    pub config: SimConfig,
    pub train: Vec<Cascade>,
    pub test: Vec<Cascade>,
}

impl DatasetBundle {
    /// Training cascades grouped in order into blocks of `config.block_size`.
    pub fn blocks(&self) -> Vec<&[Cascade]> {
        self.train.chunks(self.config.block_size).collect()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks().iter().map(|b| b.len()).collect()
    }
}

/// Generate `count` valid cascades and split them 80/20 after a seeded shuffle.
///
/// Attempt `i` draws from its own stream derived from `cfg.seed`, so the
/// output does not depend on evaluation order.
pub fn build_dataset(g: &Graph, cfg: &SimConfig, count: usize) -> Result<DatasetBundle> {
    cfg.validate()?;
    if count < 5 {
        return Err(Error::Config("dataset needs at least 5 cascades".into()));
    }
    let budget = count * RETRIES_PER_CASCADE;
    let mut valid = Vec::with_capacity(count);
    let mut attempts = 0;
    while valid.len() < count {
        if attempts == budget {
            return Err(Error::RetryBudget {
                collected: valid.len(),
                wanted: count,
                attempts,
            });
        }
        let seed = rng::derive_seed(cfg.seed, "cascade", attempts as u64);
        attempts += 1;
        let mut r = rng::seeded(seed);
        let sources = sample_sources(g, cfg, &mut r)?;
        let mut c = simulate(g, &sources, cfg, &mut r)?;
        c.seed = seed;
        if !filter_valid(&c, cfg) {
            continue;
        }
        let Ok(mut c) = partition_snapshots(c, cfg.snapshots) else {
            continue;
        };
        if cfg.include_sources {
            c = mark_sources(c);
        }
        valid.push(c);
    }

    valid.shuffle(&mut rng::stream(cfg.seed, "split", 0));
    let n_train = (count * 8 + 5) / 10;
    let test = valid.split_off(n_train);
    Ok(DatasetBundle {
        node_count: g.node_count(),
        config: cfg.clone(),
        train: valid,
        test,
    })
}
