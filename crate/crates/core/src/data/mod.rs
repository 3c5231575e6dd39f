//! Sparse datasets, block partitions and extended-support indexing.

mod csr;
mod libsvm;
mod partition;
mod support;

pub use csr::{CsrMatrix, Dataset, Row};
pub use libsvm::{parse_libsvm, read_libsvm_file, write_libsvm};
pub use partition::BlockPartition;
pub use support::{DeadBlockPolicy, SupportIndex};

use crate::error::Result;

/// Builds the extended-support index, rejecting dead blocks.
pub fn build_support_index(
    features: &CsrMatrix,
    partition: &BlockPartition,
) -> Result<SupportIndex> {
    SupportIndex::build(features, partition)
}
