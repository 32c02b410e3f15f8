use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, DatasetBundle};
use crate::error::{Error, Result};

/// 1-Wasserstein distance between the value distributions of `a` and `b`.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Length {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Mean absolute node-wise difference.
pub fn hamming(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Length {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockDistance {
    #[default]
    Wasserstein,
    Hamming,
}

impl BlockDistance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Self::Wasserstein => wasserstein_1d(a, b),
            Self::Hamming => hamming(a, b),
        }
    }
}

/// How a block is compared against a test result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    /// Node-wise mean of the block's results.
    #[default]
    Mean,
    /// Closest individual member.
    MinMember,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexBlock {
    pub results: Vec<Vec<f64>>,
    pub sources: Vec<Vec<f64>>,
    pub mean_result: Vec<f64>,
}

/// Archived training blocks consulted at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchIndex {
    node_count: usize,
    blocks: Vec<IndexBlock>,
}

impl MatchIndex {
    /// Each block is a list of `(result, sources)` pairs.
    pub fn new(node_count: usize, blocks: Vec<Vec<(Vec<f64>, Vec<f64>)>>) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for (b, members) in blocks.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::EmptyBlock(b));
            }
            let mut mean = vec![0.0; node_count];
            let (mut results, mut sources) = (Vec::new(), Vec::new());
            for (r, s) in members {
                for v in [&r, &s] {
                    if v.len() != node_count {
                        return Err(Error::Length {
                            left: v.len(),
                            right: node_count,
                        });
                    }
                }
                mean.iter_mut().zip(&r).for_each(|(m, x)| *m += x);
                results.push(r);
                sources.push(s);
            }
            let k = results.len() as f64;
            mean.iter_mut().for_each(|m| *m /= k);
            out.push(IndexBlock {
                results,
                sources,
                mean_result: mean,
            });
        }
        Ok(Self {
            node_count,
            blocks: out,
        })
    }

    pub fn from_blocks<'a>(node_count: usize, blocks: impl IntoIterator<Item = &'a [Cascade]>) -> Result<Self> {
        let raw = blocks
            .into_iter()
            .map(|b| b.iter().map(|c| (c.result_vector(), c.source_vector())).collect())
            .collect();
        Self::new(node_count, raw)
    }

    /// Index over the training blocks of a dataset.
    pub fn from_bundle(bundle: &DatasetBundle) -> Result<Self> {
        Self::from_blocks(bundle.node_count, bundle.blocks())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn sample_count(&self) -> usize {
        self.blocks.iter().map(|b| b.results.len()).sum()
    }

    pub fn block(&self, id: usize) -> Option<&IndexBlock> {
        self.blocks.get(id)
    }
}

/// Block whose stored results are closest to `result`; ties go to the lower id.
pub fn match_block(
    index: &MatchIndex,
    result: &[f64],
    distance: BlockDistance,
    representative: Representative,
) -> Result<usize> {
    if index.blocks.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut best = (0, f64::INFINITY);
    for (id, block) in index.blocks.iter().enumerate() {
        let d = match representative {
            Representative::Mean => distance.eval(result, &block.mean_result)?,
            Representative::MinMember => block
                .results
                .iter()
                .map(|r| distance.eval(result, r))
                .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d)))?,
        };
        if d < best.1 {
            best = (id, d);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wasserstein_examples() {
        let a = [0.3, 0.9, 0.1];
        assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[1., 0., 0., 0.], &[0., 1., 0., 0.]).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[1., 1., 0., 0.], &[1., 0., 0., 0.]).unwrap(), 0.25);
        assert!(matches!(wasserstein_1d(&[1.0], &[]), Err(Error::Length { .. })));
    }

    #[test]
    fn hamming_sees_support() {
        assert_eq!(hamming(&[1., 0., 0., 0.], &[0., 1., 0., 0.]).unwrap(), 0.5);
    }

    fn index(means: &[[f64; 4]]) -> MatchIndex {
        let blocks = means
            .iter()
            .map(|m| vec![(m.to_vec(), vec![1.0, 0.0, 0.0, 0.0])])
            .collect();
        MatchIndex::new(4, blocks).unwrap()
    }

    #[test]
    fn match_examples() {
        let single = index(&[[0.0; 4]]);
        assert_eq!(match_block(&single, &[1.0; 4], BlockDistance::Wasserstein, Representative::Mean).unwrap(), 0);

        let idx = index(&[[0.0; 4], [0.1, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 0.0]]);
        let y = [1.0, 1.0, 1.0, 0.0];
        assert_eq!(match_block(&idx, &y, BlockDistance::Wasserstein, Representative::Mean).unwrap(), 2);

        let tied = index(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
        assert_eq!(
            match_block(&tied, &[0.0, 0.0, 1.0, 0.0], BlockDistance::Wasserstein, Representative::Mean).unwrap(),
            0
        );
        assert_eq!(
            match_block(&tied, &[0.0, 1.0, 0.0, 0.0], BlockDistance::Hamming, Representative::Mean).unwrap(),
            1
        );
    }

    #[test]
    fn mean_representative_averages_members() {
        let idx = MatchIndex::new(
            2,
            vec![vec![(vec![1.0, 0.0], vec![0.0, 1.0]), (vec![0.0, 0.0], vec![1.0, 0.0])]],
        )
        .unwrap();
        assert_eq!(idx.block(0).unwrap().mean_result, vec![0.5, 0.0]);
        assert_eq!(idx.sample_count(), 2);
    }

    #[test]
    fn min_member_can_disagree_with_mean() {
        let idx = MatchIndex::new(
            2,
            vec![
                vec![(vec![0.5, 0.5], vec![1.0, 0.0])],
                vec![(vec![1.0, 1.0], vec![1.0, 0.0]), (vec![0.0, 0.0], vec![0.0, 1.0])],
            ],
        )
        .unwrap();
        let y = [1.0, 1.0];
        assert_eq!(match_block(&idx, &y, BlockDistance::Hamming, Representative::Mean).unwrap(), 0);
        assert_eq!(match_block(&idx, &y, BlockDistance::Hamming, Representative::MinMember).unwrap(), 1);
    }

    #[test]
    fn empty_inputs_rejected() {
        let empty = MatchIndex::new(3, vec![]).unwrap();
        assert!(matches!(
            match_block(&empty, &[0.0; 3], BlockDistance::Wasserstein, Representative::Mean),
            Err(Error::EmptyIndex)
        ));
        assert!(matches!(MatchIndex::new(3, vec![vec![]]), Err(Error::EmptyBlock(0))));
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..20).prop_flat_map(|n| {
            let v = || prop::collection::vec(-5.0f64..5.0, n);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn wasserstein_is_pseudometric((a, b, c) in pair(), seed in any::<u64>()) {
            let ab = wasserstein_1d(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - wasserstein_1d(&b, &a).unwrap()).abs() < 1e-12);
            let ac = wasserstein_1d(&a, &c).unwrap();
            let cb = wasserstein_1d(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
            let mut shuffled = a.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            prop_assert_eq!(wasserstein_1d(&a, &shuffled).unwrap(), 0.0);
        }
    }
}
