//! Sequential solvers: Sparse Proximal SAGA and the dense SAGA baseline.

mod dense;
mod driver;
pub(crate) mod kernel;
mod memory;
mod sparse;

pub use dense::{dense_saga_step, run_dense_saga, DenseSaga};
pub use kernel::Workspace;
pub use memory::{exact_average, resync_average, GradientMemory};
pub use sparse::{
    fixed_point_residual, run_sequential, sparse_gradient_estimate, sps_step, SparseSaga,
    SparseVector,
};

pub(crate) use driver::Recorder;
