//! Reference localizers that only look at the final infected set.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    AllNegative,
    RandomK,
    DegreeTopK,
    JordanCenterK,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        Self::AllNegative,
        Self::RandomK,
        Self::DegreeTopK,
        Self::JordanCenterK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AllNegative => "all_negative",
            Self::RandomK => "random_k",
            Self::DegreeTopK => "degree_top_k",
            Self::JordanCenterK => "jordan_center_k",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline {s:?}")))
    }
}

/// Predict `k` sources (none for `AllNegative`) among the infected nodes of `result`.
pub fn run_baseline<R: RngCore + ?Sized>(
    kind: BaselineKind,
    g: &Graph,
    result: &[bool],
    k: usize,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let n = g.node_count();
    if result.len() != n {
        return Err(Error::Length {
            left: result.len(),
            right: n,
        });
    }
    let mut out = vec![false; n];
    if kind == BaselineKind::AllNegative {
        return Ok(out);
    }
    if k == 0 {
        return Err(Error::Config("baseline k must be at least 1".into()));
    }
    let infected: Vec<usize> = (0..n).filter(|&v| result[v]).collect();
    if infected.len() < k {
        return Err(Error::TooFewInfected {
            k,
            available: infected.len(),
        });
    }
    let chosen: Vec<usize> = match kind {
        BaselineKind::AllNegative => unreachable!(),
        BaselineKind::RandomK => sample(rng, infected.len(), k).into_iter().map(|i| infected[i]).collect(),
        BaselineKind::DegreeTopK => lowest_k(&infected, k, |v| std::cmp::Reverse(g.undirected_neighbors(v).len())),
        BaselineKind::JordanCenterK => {
            let ecc = induced_eccentricities(g, result);
            lowest_k(&infected, k, |v| ecc[v])
        }
    };
    chosen.into_iter().for_each(|v| out[v] = true);
    Ok(out)
}

/// The `k` candidates with the smallest key; ties to the lower id.
fn lowest_k<K: Ord>(candidates: &[usize], k: usize, key: impl Fn(usize) -> K) -> Vec<usize> {
    let mut order = candidates.to_vec();
    order.sort_by_key(|&v| (key(v), v));
    order.truncate(k);
    order
}

/// Eccentricity of every member of the induced subgraph on `mask`
/// (undirected view, unreachable pairs count as `n`).
fn induced_eccentricities(g: &Graph, mask: &[bool]) -> Vec<usize> {
    let n = g.node_count();
    let members = mask.iter().filter(|&&m| m).count();
    let mut ecc = vec![usize::MAX; n];
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in (0..n).filter(|&v| mask[v]) {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        let (mut seen, mut far) = (1, 0);
        while let Some(v) = queue.pop_front() {
            far = far.max(dist[v]);
            for u in g.undirected_neighbors(v) {
                if mask[u] && dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    seen += 1;
                    queue.push_back(u);
                }
            }
        }
        ecc[s] = if seen < members { n } else { far };
    }
    ecc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{path, undirected};
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn ids(v: &[bool]) -> Vec<usize> {
        crate::cascade::ones(v)
    }

    #[test]
    fn examples() {
        let g = path(3);
        let all = vec![true; 3];
        let mut rng = seeded(0);
        assert_eq!(run_baseline(BaselineKind::AllNegative, &g, &all, 1, &mut rng).unwrap(), vec![false; 3]);
        assert_eq!(ids(&run_baseline(BaselineKind::JordanCenterK, &g, &all, 1, &mut rng).unwrap()), vec![1]);

        let star = undirected(5, &[(3, 0), (3, 1), (3, 2), (3, 4)]);
        let res = vec![true, false, true, true, true];
        assert_eq!(ids(&run_baseline(BaselineKind::DegreeTopK, &star, &res, 1, &mut rng).unwrap()), vec![3]);
    }

    #[test]
    fn too_few_infected() {
        let g = path(3);
        let res = [true, false, false];
        assert!(matches!(
            run_baseline(BaselineKind::RandomK, &g, &res, 2, &mut seeded(0)),
            Err(Error::TooFewInfected { k: 2, available: 1 })
        ));
    }

    #[test]
    fn jordan_center_respects_induced_subgraph() {
        // infected 0,1,2 and 4 with node 3 healthy: {4} is cut off
        let g = path(5);
        let res = [true, true, true, false, true];
        let pick = run_baseline(BaselineKind::JordanCenterK, &g, &res, 1, &mut seeded(0)).unwrap();
        assert_eq!(ids(&pick), vec![0]);
    }

    #[test]
    fn names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.name().parse::<BaselineKind>().unwrap(), k);
        }
    }

    fn instance() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<bool>, usize, u64)> {
        (3usize..12).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n), 0..3 * n),
                prop::collection::vec(any::<bool>(), n),
                1usize..3,
                any::<u64>(),
            )
        })
    }

    fn build(n: usize, pairs: &[(usize, usize)]) -> Graph {
        let mut seen = std::collections::HashSet::new();
        let clean: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .filter(|&(a, b)| a != b && seen.insert((a, b)))
            .collect();
        undirected(n, &clean)
    }

    proptest! {
        #[test]
        fn predictions_stay_inside_infected_set((n, pairs, res, k, seed) in instance()) {
            let g = build(n, &pairs);
            for kind in BaselineKind::ALL {
                match run_baseline(kind, &g, &res, k, &mut seeded(seed)) {
                    Ok(pred) => {
                        prop_assert!(pred.iter().zip(&res).all(|(p, r)| !p || *r));
                        let want = if kind == BaselineKind::AllNegative { 0 } else { k };
                        prop_assert_eq!(pred.iter().filter(|&&p| p).count(), want);
                    }
                    Err(Error::TooFewInfected { .. }) => prop_assert!(res.iter().filter(|&&r| r).count() < k),
                    Err(e) => prop_assert!(false, "{e}"),
                }
            }
        }

        #[test]
        fn jordan_center_relabel_invariant((n, pairs, res, _k, seed) in instance()) {
            let g = build(n, &pairs);
            prop_assume!(res.iter().any(|&r| r));
            let ecc = induced_eccentricities(&g, &res);
            let best = (0..n).filter(|&v| res[v]).map(|v| ecc[v]).min().unwrap();
            // reverse the labels; the set of optimal centers must map onto itself
            let perm: Vec<usize> = (0..n).rev().collect();
            let relabeled: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let g2 = build(n, &relabeled);
            let mut res2 = vec![false; n];
            (0..n).for_each(|v| res2[perm[v]] = res[v]);
            let ecc2 = induced_eccentricities(&g2, &res2);
            for v in (0..n).filter(|&v| res[v]) {
                prop_assert_eq!(ecc[v], ecc2[perm[v]]);
            }
            let pick = run_baseline(BaselineKind::JordanCenterK, &g2, &res2, 1, &mut seeded(seed)).unwrap();
            let chosen = ids(&pick)[0];
            prop_assert_eq!(ecc2[chosen], best);
        }
    }
}
