//! Graph topology, transmission weights and hop distances.

mod adjacency;
mod generate;
mod io;

pub use adjacency::NormalizedAdjacency;
pub use generate::barabasi_albert;
pub use io::{load_edge_list, parse_edge_list, save_edge_list, serialize_edge_list};

use std::collections::{HashSet, VecDeque};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Lower bound (exclusive) of edge transmission weights.
pub const WEIGHT_MIN: f64 = 0.2;
/// Upper bound (exclusive) of edge transmission weights.
pub const WEIGHT_MAX: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
}

/// A simple graph with dense 0-based node ids.
///
/// Undirected graphs store each edge once (as given) but expose it in both
/// directions through [`Graph::out_neighbors`] / [`Graph::in_neighbors`].
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<Edge>,
    weights: Option<Vec<f64>>,
    /// (neighbor, edge index) per node, following edge direction.
    out_adj: Vec<Vec<(usize, usize)>>,
    in_adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Build a graph from an edge list, validating ids, self-loops and duplicates.
    pub fn new(n: usize, directed: bool, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            for id in [e.src, e.dst] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if e.src == e.dst {
                return Err(Error::SelfLoop(e.src));
            }
            let key = if directed {
                (e.src, e.dst)
            } else {
                (e.src.min(e.dst), e.src.max(e.dst))
            };
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(e.src, e.dst));
            }
            out_adj[e.src].push((e.dst, idx));
            in_adj[e.dst].push((e.src, idx));
            if !directed {
                out_adj[e.dst].push((e.src, idx));
                in_adj[e.src].push((e.dst, idx));
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            directed,
            edges,
            weights: None,
            out_adj,
            in_adj,
        })
    }

    /// Attach explicit weights, one per edge, each inside `(WEIGHT_MIN, WEIGHT_MAX)`.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Length {
                left: weights.len(),
                right: self.edges.len(),
            });
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !(**w > WEIGHT_MIN && **w < WEIGHT_MAX))
        {
            return Err(Error::Config(format!(
                "edge weight {w} outside ({WEIGHT_MIN}, {WEIGHT_MAX})"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub(crate) fn require_weights(&self) -> Result<&[f64]> {
        self.weights
            .as_deref()
            .ok_or_else(|| Error::Config("edge weights have not been assigned".into()))
    }

    /// Neighbors reachable along one edge, with the index of that edge.
    pub fn out_neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.in_adj[v]
    }

    /// Degree used for thresholds and degree rankings: in-degree for directed
    /// graphs, plain degree otherwise.
    pub fn degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    /// Neighbor set ignoring direction.
    pub fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.out_adj[v]
            .iter()
            .chain(self.in_adj[v].iter())
            .map(|&(u, _)| u)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Replace all weights with independent draws from the open interval
    /// `(WEIGHT_MIN, WEIGHT_MAX)`.
    pub fn assign_edge_weights(mut self, rng: &mut Rng) -> Self {
        let weights = (0..self.edges.len())
            .map(|_| sample_open_weight(rng))
            .collect();
        self.weights = Some(weights);
        self
    }

    /// Hop distances from `source` following edge direction.
    ///
    /// Unreachable nodes get [`Graph::unreachable`] (= `n`).
    pub fn bfs_distances(&self, source: usize) -> Result<Vec<usize>> {
        if source >= self.n {
            return Err(Error::NodeOutOfRange {
                id: source,
                n: self.n,
            });
        }
        let sentinel = self.unreachable();
        let mut dist = vec![sentinel; self.n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.out_adj[u] {
                if dist[v] == sentinel {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Distance sentinel for unreachable pairs.
    pub fn unreachable(&self) -> usize {
        self.n
    }
}

fn sample_open_weight(rng: &mut Rng) -> f64 {
    loop {
        let w = rng.random_range(WEIGHT_MIN..WEIGHT_MAX);
        if w > WEIGHT_MIN {
            return w;
        }
    }
}
