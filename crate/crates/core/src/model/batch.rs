use ndarray::{s, Array2};

use crate::cascade::Cascade;
use crate::error::{Error, Result};

/// Dense tensors for a group of cascades on one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub node_count: usize,
    /// `B x n` source indicators (zeros when unknown).
    pub sources: Array2<f64>,
    /// `B x (c*n)`: snapshots `Y_1 ‖ … ‖ Y_c` per row.
    pub conditioning: Array2<f64>,
    /// `(B*n) x c`: the same snapshots as per-node features.
    pub node_features: Array2<f64>,
    /// `B x n` final results.
    pub results: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.sources.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot_inputs(&self) -> usize {
        self.node_features.ncols()
    }

    pub fn from_cascades<'a>(
        cascades: impl IntoIterator<Item = &'a Cascade>,
        snapshot_inputs: usize,
    ) -> Result<Self> {
        let cascades: Vec<&Cascade> = cascades.into_iter().collect();
        let first = cascades
            .first()
            .ok_or_else(|| Error::Config("empty batch".into()))?;
        let n = first.node_count();
        let rows: Vec<Observation> = cascades
            .iter()
            .map(|c| {
                if c.node_count() != n {
                    return Err(Error::Length {
                        left: c.node_count(),
                        right: n,
                    });
                }
                Ok(Observation {
                    sources: c.source_vector(),
                    snapshots: c.snapshot_vectors(),
                    result: c.result_vector(),
                })
            })
            .collect::<Result<_>>()?;
        Self::from_observations(&rows, n, snapshot_inputs)
    }

    /// A single observed cascade with unknown sources.
    pub fn observed(snapshots: &[Vec<f64>], result: &[f64], snapshot_inputs: usize) -> Result<Self> {
        let n = result.len();
        let row = Observation {
            sources: vec![0.0; n],
            snapshots: snapshots.to_vec(),
            result: result.to_vec(),
        };
        Self::from_observations(std::slice::from_ref(&row), n, snapshot_inputs)
    }

    /// Same conditioning, different source rows.
    pub fn with_sources(&self, sources: &[Vec<f64>]) -> Result<Self> {
        if self.len() != 1 {
            return Err(Error::Config("with_sources expects a single-row batch".into()));
        }
        let n = self.node_count;
        let b = sources.len();
        let mut out = Batch {
            node_count: n,
            sources: Array2::zeros((b, n)),
            conditioning: Array2::zeros((b, self.conditioning.ncols())),
            node_features: Array2::zeros((b * n, self.snapshot_inputs())),
            results: Array2::zeros((b, n)),
        };
        for (i, s) in sources.iter().enumerate() {
            if s.len() != n {
                return Err(Error::Length { left: s.len(), right: n });
            }
            out.sources.row_mut(i).assign(&ndarray::ArrayView1::from(s.as_slice()));
            out.conditioning.row_mut(i).assign(&self.conditioning.row(0));
            out.results.row_mut(i).assign(&self.results.row(0));
            out.node_features
                .slice_mut(s![i * n..(i + 1) * n, ..])
                .assign(&self.node_features);
        }
        Ok(out)
    }

    fn from_observations(rows: &[Observation], n: usize, c: usize) -> Result<Self> {
        let b = rows.len();
        let mut sources = Array2::zeros((b, n));
        let mut conditioning = Array2::zeros((b, c * n));
        let mut node_features = Array2::zeros((b * n, c));
        let mut results = Array2::zeros((b, n));
        for (i, obs) in rows.iter().enumerate() {
            if c > obs.snapshots.len() {
                return Err(Error::Config(format!(
                    "model wants {c} snapshots, cascade has {}",
                    obs.snapshots.len()
                )));
            }
            for (j, snap) in obs.snapshots.iter().take(c).enumerate() {
                if snap.len() != n {
                    return Err(Error::Length { left: snap.len(), right: n });
                }
                for (v, &x) in snap.iter().enumerate() {
                    conditioning[[i, j * n + v]] = x;
                    node_features[[i * n + v, j]] = x;
                }
            }
            for v in 0..n {
                sources[[i, v]] = obs.sources[v];
                results[[i, v]] = obs.result[v];
            }
        }
        Ok(Self {
            node_count: n,
            sources,
            conditioning,
            node_features,
            results,
        })
    }
}

struct Observation {
    sources: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
    result: Vec<f64>,
}
