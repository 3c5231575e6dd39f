use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::atomic::AtomicF64;
use crate::problem::Problem;
use crate::saga::kernel::{apply, gather, SagaAccess};
use crate::saga::{GradientMemory, Workspace};

/// Parameters shared by all workers. Every cell is updated with
/// single-coordinate atomics; there is no lock anywhere on this state.
#[derive(Debug)]
pub struct SharedState {
    x: Box<[AtomicF64]>,
    avg: Box<[AtomicF64]>,
    scalars: Box<[AtomicF64]>,
    counter: AtomicU64,
}

fn cells(values: &[f64]) -> Box<[AtomicF64]> {
    values.iter().map(|&v| AtomicF64::new(v)).collect()
}

fn snapshot(cells: &[AtomicF64], order: Ordering) -> Vec<f64> {
    cells.iter().map(|c| c.load(order)).collect()
}

impl SharedState {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self::from_parts(&vec![0.0; p], &GradientMemory::zeros(n, p))
    }

    pub fn from_parts(x: &[f64], memory: &GradientMemory) -> Self {
        Self {
            x: cells(x),
            avg: cells(memory.avg()),
            scalars: cells(memory.scalars()),
            counter: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinate-wise (hence possibly inconsistent) copy of `x`.
    pub fn x_snapshot(&self) -> Vec<f64> {
        snapshot(&self.x, Ordering::SeqCst)
    }

    pub fn memory_snapshot(&self) -> GradientMemory {
        GradientMemory::from_parts(
            snapshot(&self.scalars, Ordering::SeqCst),
            snapshot(&self.avg, Ordering::SeqCst),
        )
    }

    /// Batched global iteration counter.
    pub fn counter(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    pub(crate) fn counter_add(&self, amount: u64) -> u64 {
        self.counter.fetch_add(amount, Ordering::SeqCst)
    }
}

/// How a worker publishes the new memory scalar of its sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarUpdate {
    /// Atomic exchange before the average update; the average moves by the
    /// difference to the value actually replaced. Two workers that overlap
    /// on the same sample then still leave `avg = (1/n) sum_i scalars[i] a_i`
    /// up to rounding.
    #[default]
    Swap,
    /// Average update from the scalar read at the start of the iteration,
    /// then a plain atomic store. Overlapping updates of the same sample
    /// leave a permanent error in the average.
    Store,
}

/// Atomic view of [`SharedState`] with a fixed memory ordering.
pub(crate) struct SharedAccess<'a> {
    pub state: &'a SharedState,
    pub order: Ordering,
    pub update: ScalarUpdate,
}

impl SagaAccess for SharedAccess<'_> {
    #[inline]
    fn read_x(&self, b: usize) -> f64 {
        self.state.x[b].load(self.order)
    }

    #[inline]
    fn read_avg(&self, b: usize) -> f64 {
        self.state.avg[b].load(self.order)
    }

    #[inline]
    fn read_scalar(&self, i: usize) -> f64 {
        self.state.scalars[i].load(self.order)
    }

    #[inline]
    fn write_x(&mut self, b: usize, xhat: f64, z: f64) {
        // Other workers may have moved x[b] since it was read, so publish
        // the increment rather than the value.
        self.state.x[b].fetch_add(z - xhat, self.order);
    }

    #[inline]
    fn add_avg(&mut self, b: usize, delta: f64) {
        self.state.avg[b].fetch_add(delta, self.order);
    }

    #[inline]
    fn store_scalar(&mut self, i: usize, value: f64) {
        self.state.scalars[i].store(value, self.order);
    }

    #[inline]
    fn swap_scalar(&mut self, i: usize, value: f64) -> Option<f64> {
        match self.update {
            ScalarUpdate::Swap => Some(self.state.scalars[i].swap(value, self.order)),
            ScalarUpdate::Store => None,
        }
    }
}

/// What one asynchronous iteration wrote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedDelta {
    /// Number of coordinates of `T_i` visited.
    pub coords: usize,
    /// New memory scalar of the sample.
    pub scalar: f64,
}

/// One lock-free iteration on shared state:
/// inconsistent reads of `x` and the average on `T_i` and of `alpha_i`, a
/// local proximal step, then atomic adds into `x` and the average and an
/// atomic update of the new memory scalar.
pub fn worker_iteration(
    problem: &Problem<'_>,
    shared: &SharedState,
    workspace: &mut Workspace,
    i: usize,
    gamma: f64,
    update: ScalarUpdate,
) -> AppliedDelta {
    worker_iteration_ordered(
        problem,
        shared,
        workspace,
        i,
        gamma,
        Ordering::SeqCst,
        update,
    )
}

#[inline]
pub(crate) fn worker_iteration_ordered(
    problem: &Problem<'_>,
    shared: &SharedState,
    workspace: &mut Workspace,
    i: usize,
    gamma: f64,
    order: Ordering,
    update: ScalarUpdate,
) -> AppliedDelta {
    let mut access = SharedAccess {
        state: shared,
        order,
        update,
    };
    gather(problem, &access, workspace, i);
    let coords = apply(problem, &mut access, workspace, i, gamma);
    AppliedDelta {
        coords,
        scalar: workspace.new_scalar(),
    }
}
