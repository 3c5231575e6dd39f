use serde::{Deserialize, Serialize};

use super::csr::CsrMatrix;
use super::partition::BlockPartition;
use crate::error::{Error, Result};

/// What to do with blocks that no sample touches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeadBlockPolicy {
    /// Refuse to build the index.
    #[default]
    Reject,
    /// Exclude the blocks from the problem; they keep their initial value.
    Drop,
}

/// Per-sample extended supports and the block reweighting they induce.
///
/// `T_i` is the set of blocks that intersect the support of row `i`. A block
/// appearing in `n_B` of the `n` extended supports gets weight `d_B = n / n_B`,
/// which makes the sparse surrogate of the penalty unbiased.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportIndex {
    extended_support: Vec<Vec<usize>>,
    block_counts: Vec<usize>,
    block_weights: Vec<f64>,
    coord_weights: Vec<f64>,
    dropped_blocks: Vec<usize>,
    delta: f64,
}

impl SupportIndex {
    pub fn build(features: &CsrMatrix, partition: &BlockPartition) -> Result<Self> {
        Self::build_with(features, partition, DeadBlockPolicy::Reject)
    }

    pub fn build_with(
        features: &CsrMatrix,
        partition: &BlockPartition,
        policy: DeadBlockPolicy,
    ) -> Result<Self> {
        if partition.dim() != features.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: features.n_cols(),
                got: partition.dim(),
            });
        }
        let n = features.n_rows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let n_blocks = partition.n_blocks();
        let mut block_counts = vec![0usize; n_blocks];
        let mut last_seen = vec![usize::MAX; n_blocks];
        let mut extended_support = Vec::with_capacity(n);
        for (i, row) in features.rows().enumerate() {
            let mut support = Vec::new();
            for &j in row.indices {
                let b = partition.block_of(j);
                if last_seen[b] != i {
                    last_seen[b] = i;
                    block_counts[b] += 1;
                    support.push(b);
                }
            }
            support.sort_unstable();
            extended_support.push(support);
        }

        let dropped_blocks: Vec<usize> = (0..n_blocks).filter(|&b| block_counts[b] == 0).collect();
        if let (DeadBlockPolicy::Reject, Some(&b)) = (policy, dropped_blocks.first()) {
            return Err(Error::DeadBlock(b));
        }
        if dropped_blocks.len() == n_blocks {
            return Err(Error::InvalidArgument(
                "every block is dead: all rows are empty".into(),
            ));
        }

        let n_f = n as f64;
        let block_weights: Vec<f64> = block_counts
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { n_f / c as f64 })
            .collect();
        let coord_weights = partition
            .block_ids()
            .iter()
            .map(|&b| block_weights[b])
            .collect();
        let delta = *block_counts.iter().max().unwrap() as f64 / n_f;
        Ok(Self {
            extended_support,
            block_counts,
            block_weights,
            coord_weights,
            dropped_blocks,
            delta,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.extended_support.len()
    }

    /// Sorted block ids of `T_i`.
    #[inline]
    pub fn extended_support(&self, i: usize) -> &[usize] {
        &self.extended_support[i]
    }

    /// `n_B` for every block.
    pub fn block_counts(&self) -> &[usize] {
        &self.block_counts
    }

    /// `d_B` for every block; 0 for dropped blocks.
    pub fn block_weights(&self) -> &[f64] {
        &self.block_weights
    }

    /// `d_B` expanded to coordinates.
    #[inline]
    pub fn coord_weights(&self) -> &[f64] {
        &self.coord_weights
    }

    pub fn dropped_blocks(&self) -> &[usize] {
        &self.dropped_blocks
    }

    /// The sparsity measure: `max_B n_B / n`, always in `[1/n, 1]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_live(&self, block: usize) -> bool {
        self.block_counts[block] > 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(p: usize, rows: &[&[usize]]) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| r.iter().map(|&j| (j, 1.0)).collect())
            .collect();
        CsrMatrix::from_rows(p, &rows).unwrap()
    }

    #[test]
    fn counts_and_weights_on_singletons() {
        // coord0 in all rows, coord1 in two, coord2 in one.
        let m = rows(3, &[&[0, 1, 2], &[0, 1], &[0], &[0]]);
        let part = BlockPartition::singleton(3).unwrap();
        let idx = SupportIndex::build(&m, &part).unwrap();
        assert_eq!(idx.block_counts(), &[4, 2, 1]);
        assert_eq!(idx.block_weights(), &[1.0, 2.0, 4.0]);
        assert_eq!(idx.delta(), 1.0);
        assert_eq!(idx.extended_support(1), &[0, 1]);
    }

    #[test]
    fn dense_rows_give_unit_weights() {
        let m = rows(3, &[&[0, 1, 2], &[0, 1, 2]]);
        let part = BlockPartition::from_blocks(3, vec![vec![0, 2], vec![1]]).unwrap();
        let idx = SupportIndex::build(&m, &part).unwrap();
        assert_eq!(idx.block_weights(), &[1.0, 1.0]);
        assert_eq!(idx.delta(), 1.0);
    }

    #[test]
    fn disjoint_supports_reach_the_lower_bound() {
        let n = 5;
        let r: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let r: Vec<&[usize]> = r.iter().map(Vec::as_slice).collect();
        let idx =
            SupportIndex::build(&rows(n, &r), &BlockPartition::singleton(n).unwrap()).unwrap();
        assert!(idx.block_weights().iter().all(|&d| d == n as f64));
        assert_eq!(idx.delta(), 1.0 / n as f64);
    }

    #[test]
    fn single_block_has_unit_weight() {
        let m = rows(4, &[&[0], &[3], &[1, 2]]);
        let idx = SupportIndex::build(&m, &BlockPartition::single_block(4).unwrap()).unwrap();
        assert_eq!(idx.block_weights(), &[1.0]);
        assert_eq!(idx.delta(), 1.0);
        assert!((0..3).all(|i| idx.extended_support(i) == [0]));
    }

    #[test]
    fn dead_blocks_rejected_or_dropped() {
        let m = rows(3, &[&[0], &[2]]);
        let part = BlockPartition::singleton(3).unwrap();
        assert!(matches!(
            SupportIndex::build(&m, &part),
            Err(Error::DeadBlock(1))
        ));
        let idx = SupportIndex::build_with(&m, &part, DeadBlockPolicy::Drop).unwrap();
        assert_eq!(idx.dropped_blocks(), &[1]);
        assert_eq!(idx.coord_weights(), &[2.0, 0.0, 2.0]);
        assert_eq!(idx.delta(), 0.5);
    }

    #[test]
    fn empty_rows_have_empty_support() {
        let m = rows(2, &[&[0, 1], &[]]);
        let idx = SupportIndex::build(&m, &BlockPartition::singleton(2).unwrap()).unwrap();
        assert!(idx.extended_support(1).is_empty());
        assert_eq!(idx.block_weights(), &[2.0, 2.0]);
    }
}
