//! ProxASAGA: lock-free asynchronous Sparse Proximal SAGA on shared memory.

mod atomic;
mod engine;
mod shared;
mod speedup;

pub use atomic::{atomic_float_add, AtomicF64};
pub use engine::{
    run_async, run_async_detailed, AsyncConfig, AsyncRun, MemoryOrdering, SnapshotMode,
};
pub use shared::{worker_iteration, AppliedDelta, ScalarUpdate, SharedState};
pub use speedup::{measure_speedup, SpeedupRow, SpeedupTable};
