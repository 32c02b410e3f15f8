use rand::seq::index;
use rand::{Rng, RngCore};

use super::{Cascade, Mechanism, SimConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Draw the source indicator vector.
///
/// GLT sources are restricted to the upper half of the id range
/// (`id >= n / 2`) so early-stage threshold diffusion is viable.
pub fn sample_sources<R: RngCore + ?Sized>(
    g: &Graph,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let n = g.node_count();
    let k = cfg.sources.resolve(n);
    let offset = match cfg.mechanism {
        Mechanism::Glt => n / 2,
        Mechanism::Si | Mechanism::Sir => 0,
    };
    let pool = n - offset;
    if k == 0 || k > pool {
        return Err(Error::SourcePool {
            requested: k,
            available: pool,
        });
    }
    let mut s = vec![false; n];
    for i in index::sample(rng, pool, k) {
        s[offset + i] = true;
    }
    Ok(s)
}

pub fn simulate<R: RngCore + ?Sized>(
    g: &Graph,
    sources: &[bool],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Cascade> {
    match cfg.mechanism {
        Mechanism::Si => simulate_si(g, sources, cfg, rng),
        Mechanism::Sir => simulate_sir(g, sources, cfg, rng),
        Mechanism::Glt => simulate_glt(g, sources, cfg),
    }
}

/// Susceptible–infected spread in synchronous rounds.
pub fn simulate_si<R: RngCore + ?Sized>(
    g: &Graph,
    sources: &[bool],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Cascade> {
    let mut c = contagion(g, sources, cfg, 0.0, rng)?;
    c.mechanism = Mechanism::Si;
    Ok(c)
}

/// Susceptible–infected–recovered spread. Recovered nodes stop
/// transmitting but stay marked as ever-infected.
pub fn simulate_sir<R: RngCore + ?Sized>(
    g: &Graph,
    sources: &[bool],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Cascade> {
    let mut c = contagion(g, sources, cfg, cfg.sir_recovery, rng)?;
    c.mechanism = Mechanism::Sir;
    Ok(c)
}

fn check_sources(g: &Graph, sources: &[bool]) -> Result<()> {
    if sources.len() != g.node_count() {
        return Err(Error::Length {
            left: sources.len(),
            right: g.node_count(),
        });
    }
    if !sources.iter().any(|&b| b) {
        return Err(Error::Config("cascade needs at least one source".into()));
    }
    Ok(())
}

fn contagion<R: RngCore + ?Sized>(
    g: &Graph,
    sources: &[bool],
    cfg: &SimConfig,
    recovery: f64,
    rng: &mut R,
) -> Result<Cascade> {
    check_sources(g, sources)?;
    let weights = g.require_weights()?;
    let n = g.node_count();
    let max_steps = cfg.max_steps_for(n);

    let mut infected = sources.to_vec();
    let mut active: Vec<usize> = super::ones(sources);
    let mut order = Vec::new();
    let mut fresh = Vec::new();

    for round in 1..=max_steps {
        if active.is_empty() {
            break;
        }
        fresh.clear();
        for &u in &active {
            for &(v, e) in g.out_neighbors(u) {
                if infected[v] {
                    continue;
                }
                if rng.random::<f64>() < weights[e] {
                    infected[v] = true;
                    fresh.push(v);
                }
            }
        }
        if recovery > 0.0 {
            active.retain(|_| rng.random::<f64>() >= recovery);
        }
        if fresh.is_empty() {
            break;
        }
        fresh.sort_unstable();
        order.extend(fresh.iter().map(|&v| (v, round)));
        active.extend_from_slice(&fresh);
        active.sort_unstable();
    }

    Ok(unpartitioned(Mechanism::Si, sources, order))
}

/// Generalized linear threshold dynamics: a susceptible node activates once
/// the summed weight of its infected in-neighbors reaches `k^degree`.
/// No randomness is involved once weights and sources are fixed.
pub fn simulate_glt(g: &Graph, sources: &[bool], cfg: &SimConfig) -> Result<Cascade> {
    check_sources(g, sources)?;
    let weights = g.require_weights()?;
    let n = g.node_count();
    let thresholds: Vec<f64> = (0..n)
        .map(|v| cfg.glt_base.powi(g.degree(v) as i32))
        .collect();

    let mut infected = sources.to_vec();
    let mut order = Vec::new();
    let mut fresh = Vec::new();
    for round in 1..=cfg.max_steps_for(n) {
        fresh.clear();
        for v in (0..n).filter(|&v| !infected[v]) {
            let pressure: f64 = g
                .in_neighbors(v)
                .iter()
                .filter(|&&(u, _)| infected[u])
                .map(|&(_, e)| weights[e])
                .sum();
            if pressure > 0.0 && pressure >= thresholds[v] {
                fresh.push(v);
            }
        }
        if fresh.is_empty() {
            break;
        }
        for &v in &fresh {
            infected[v] = true;
            order.push((v, round));
        }
    }
    Ok(unpartitioned(Mechanism::Glt, sources, order))
}

fn unpartitioned(mechanism: Mechanism, sources: &[bool], order: Vec<(usize, usize)>) -> Cascade {
    let mut result = vec![false; sources.len()];
    for &(v, _) in &order {
        result[v] = true;
    }
    Cascade {
        mechanism,
        seed: 0,
        sources: sources.to_vec(),
        infection_order: order,
        snapshots: Vec::new(),
        result,
    }
}
