use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of the coordinates `0..p` into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// Every coordinate in its own block; the natural choice for separable
    /// penalties such as the l1 norm.
    pub fn singleton(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidPartition(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            block_of: (0..p).collect(),
            blocks: (0..p).map(|j| vec![j]).collect(),
        })
    }

    /// One block holding every coordinate.
    pub fn single_block(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidPartition(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            block_of: vec![0; p],
            blocks: vec![(0..p).collect()],
        })
    }

    /// Validates arbitrary blocks as a partition of `0..p`. Coordinates within
    /// a block are sorted; block order is preserved.
    pub fn from_blocks(p: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidPartition(
                "dimension must be at least 1".into(),
            ));
        }
        let mut block_of = vec![usize::MAX; p];
        let mut sorted = Vec::with_capacity(blocks.len());
        for (id, mut block) in blocks.into_iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {id} is empty")));
            }
            block.sort_unstable();
            for &j in &block {
                if j >= p {
                    return Err(Error::InvalidPartition(format!(
                        "block {id} contains coordinate {j} >= {p}"
                    )));
                }
                if block_of[j] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "coordinate {j} appears in blocks {} and {id}",
                        block_of[j]
                    )));
                }
                block_of[j] = id;
            }
            sorted.push(block);
        }
        if let Some(j) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "coordinate {j} is not covered"
            )));
        }
        Ok(Self {
            block_of,
            blocks: sorted,
        })
    }

    /// Reads a partition file: one block per line, whitespace-separated
    /// 0-based coordinate ids. Blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(reader: R, p: usize) -> Result<Self> {
        let mut blocks = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("");
            let block = content
                .split_ascii_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        message: format!("invalid coordinate id {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if !block.is_empty() {
                blocks.push(block);
            }
        }
        Self::from_blocks(p, blocks)
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block_of(&self, coord: usize) -> usize {
        self.block_of[coord]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.block_of
    }

    #[inline]
    pub fn block(&self, id: usize) -> &[usize] {
        &self.blocks[id]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// True when every block is a single coordinate.
    pub fn is_singleton(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_blocks() {
        let part = BlockPartition::singleton(3).unwrap();
        assert_eq!(part.blocks(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(part.block_ids(), &[0, 1, 2]);
        assert_eq!(BlockPartition::singleton(1).unwrap().blocks(), &[vec![0]]);
        assert!(BlockPartition::singleton(0).is_err());
    }

    #[test]
    fn single_block() {
        let part = BlockPartition::single_block(3).unwrap();
        assert_eq!(part.blocks(), &[vec![0, 1, 2]]);
        assert_eq!(part.block_ids(), &[0, 0, 0]);
        assert!(BlockPartition::single_block(0).is_err());
    }

    #[test]
    fn from_blocks_checks_partition() {
        assert!(BlockPartition::from_blocks(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(BlockPartition::from_blocks(3, vec![vec![0, 1]]).is_err());
        assert!(BlockPartition::from_blocks(3, vec![vec![0, 3], vec![1, 2]]).is_err());
        assert!(BlockPartition::from_blocks(3, vec![vec![0, 1, 2], vec![]]).is_err());
        let part = BlockPartition::from_blocks(4, vec![vec![3, 1], vec![0, 2]]).unwrap();
        assert_eq!(part.block(0), &[1, 3]);
        assert_eq!(part.block_ids(), &[1, 0, 1, 0]);
    }

    #[test]
    fn reads_partition_file() {
        let text = "0 2\n# comment\n\n1 3 4\n";
        let part = BlockPartition::read(text.as_bytes(), 5).unwrap();
        assert_eq!(part.blocks(), &[vec![0, 2], vec![1, 3, 4]]);
        assert!(BlockPartition::read("0 x\n".as_bytes(), 2).is_err());
        assert!(BlockPartition::read("0\n".as_bytes(), 2).is_err());
    }
}
