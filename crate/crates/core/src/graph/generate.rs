use rand::Rng as _;

use super::{Edge, Graph};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Undirected Barabási–Albert graph.
///
/// Starts from a complete graph on `m + 1` nodes; every later node attaches
/// to `m` distinct existing nodes chosen with probability proportional to
/// degree. Edge count is `m(m+1)/2 + m(n - m - 1)`.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Result<Graph> {
    if m == 0 || n <= m {
        return Err(Error::Config(format!(
            "Barabási–Albert needs 0 < m < n (got n={n}, m={m})"
        )));
    }
    let mut edges = Vec::new();
    // every node appears once per incident edge
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in (u + 1)..=m {
            edges.push(Edge { src: u, dst: v });
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in (m + 1)..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push(Edge { src: t, dst: new });
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    Graph::new(n, false, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn edge_count_matches_seed_clique_rule() {
        let g = barabasi_albert(1000, 2, &mut seeded(11)).unwrap();
        assert_eq!(g.edge_count(), 1997);
        let g = barabasi_albert(200, 2, &mut seeded(11)).unwrap();
        assert_eq!(g.edge_count(), 397);
        assert!((0..200).all(|v| g.degree(v) >= 2));
    }

    #[test]
    fn deterministic() {
        let a = barabasi_albert(100, 3, &mut seeded(5)).unwrap();
        let b = barabasi_albert(100, 3, &mut seeded(5)).unwrap();
        assert_eq!(a.edges(), b.edges());
    }
}
