use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::shared::{worker_iteration_ordered, ScalarUpdate, SharedState};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::rng::SampleStream;
use crate::saga::{GradientMemory, Workspace};
use crate::trace::{Checkpoint, SolverKind, Trace};

/// Who takes the objective snapshots during an asynchronous run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotMode {
    /// A dedicated monitor thread polls the iteration count and snapshots
    /// `x` whenever a checkpoint boundary has been passed.
    #[default]
    Monitor,
    /// The worker whose counter update crosses a checkpoint boundary takes
    /// the snapshot itself. Checkpoint positions are then exact up to one
    /// counter batch regardless of how threads are scheduled.
    Inline,
}

/// Memory ordering used for every atomic on the shared parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryOrdering {
    #[default]
    SeqCst,
    Relaxed,
}

impl MemoryOrdering {
    fn atomic(self) -> Ordering {
        match self {
            MemoryOrdering::SeqCst => Ordering::SeqCst,
            MemoryOrdering::Relaxed => Ordering::Relaxed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncConfig {
    pub threads: usize,
    #[serde(flatten)]
    pub solver: SolverConfig,
    /// Iterations a worker performs between updates of the global counter.
    pub counter_batch: usize,
    pub snapshot: SnapshotMode,
    /// Upper bound accepted for `threads`.
    pub max_threads: usize,
    pub ordering: MemoryOrdering,
    pub scalar_update: ScalarUpdate,
    /// Keep every sampled index, per worker.
    pub record_samples: bool,
}

impl Default for AsyncConfig {
    fn default() -> Self {
        Self {
            threads: 1,
            solver: SolverConfig::default(),
            counter_batch: 100,
            snapshot: SnapshotMode::default(),
            max_threads: 256,
            ordering: MemoryOrdering::default(),
            scalar_update: ScalarUpdate::default(),
            record_samples: false,
        }
    }
}

impl AsyncConfig {
    pub fn new(threads: usize, solver: SolverConfig) -> Self {
        Self {
            threads,
            solver,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        if self.threads > self.max_threads {
            return Err(Error::InvalidArgument(format!(
                "threads = {} exceeds the cap of {}",
                self.threads, self.max_threads
            )));
        }
        if self.counter_batch == 0 {
            return Err(Error::InvalidArgument(
                "counter_batch must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything an asynchronous run produced.
#[derive(Debug, Clone)]
pub struct AsyncRun {
    pub trace: Trace,
    /// Final memory, with the average recomputed from the scalars.
    pub memory: GradientMemory,
    /// Max-norm gap between the running and exact average before resync.
    pub drift_before_resync: f64,
    /// Sampled indices per worker, when requested.
    pub sampled: Option<Vec<Vec<usize>>>,
    /// Iterations actually performed by all workers.
    pub total_iterations: u64,
    /// Final value of the batched global counter.
    pub counter_iterations: u64,
}

#[repr(align(64))]
#[derive(Default)]
struct Progress(AtomicU64);

/// Bookkeeping shared by the workers and the monitor. None of it is read by
/// the solver arithmetic.
struct RunControl<'c> {
    start: Instant,
    stop: AtomicBool,
    finished: AtomicUsize,
    progress: Box<[Progress]>,
    next_checkpoint: AtomicU64,
    every: u64,
    n: f64,
    target: Option<f64>,
    reference: Option<&'c [f64]>,
    checkpoints: Mutex<Vec<Checkpoint>>,
}

impl RunControl<'_> {
    fn performed(&self) -> u64 {
        self.progress
            .iter()
            .map(|p| p.0.load(Ordering::SeqCst))
            .sum()
    }

    /// Seconds since the start, snapshot time included: while one thread
    /// evaluates the objective the others keep iterating, so the evaluation
    /// cost cannot be subtracted per run.
    fn wall_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn snapshot(&self, problem: &Problem<'_>, shared: &SharedState) {
        let wall_seconds = self.wall_seconds();
        let iterations = self.performed();
        let counter = shared.counter();
        let x = shared.x_snapshot();
        self.push(problem, iterations, counter, wall_seconds, &x);
    }

    fn push(&self, problem: &Problem<'_>, iterations: u64, counter: u64, wall: f64, x: &[f64]) {
        let objective = problem.objective(x);
        let distance_sq = self
            .reference
            .map(|r| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum());
        if self.target.is_some_and(|t| objective <= t) {
            self.stop.store(true, Ordering::SeqCst);
        }
        self.checkpoints.lock().unwrap().push(Checkpoint {
            iterations,
            epochs: iterations as f64 / self.n,
            objective,
            wall_seconds: wall,
            counter_iterations: Some(counter),
            distance_sq,
        });
    }

    /// Claims the checkpoint boundary at or below `count`, if one is due.
    fn claim_boundary(&self, count: u64) -> bool {
        let mut due = self.next_checkpoint.load(Ordering::SeqCst);
        while count >= due {
            let next = (count / self.every + 1) * self.every;
            match self.next_checkpoint.compare_exchange(
                due,
                next,
                Ordering::SeqCst,
                Ordering::SeqCst,
            ) {
                Ok(_) => return true,
                Err(actual) => due = actual,
            }
        }
        false
    }
}

/// Splits `total` iterations over `threads` workers as evenly as possible.
fn quotas(total: u64, threads: usize) -> Vec<u64> {
    let t = threads as u64;
    (0..t)
        .map(|w| total / t + u64::from(w < total % t))
        .collect()
}

/// Runs ProxASAGA and returns its trace.
pub fn run_async(problem: &Problem<'_>, config: &AsyncConfig) -> Result<Trace> {
    run_async_detailed(problem, config).map(|r| r.trace)
}

/// Runs ProxASAGA: `threads` workers share `x`, the memory scalars and their
/// average through atomic cells and each performs its share of
/// `epochs * n` iterations on its own sample stream.
///
/// The trace records, per checkpoint, the number of iterations performed by
/// all workers together and the batched global counter. The `tolerance`
/// setting of the solver config is not used by this solver.
pub fn run_async_detailed(problem: &Problem<'_>, config: &AsyncConfig) -> Result<AsyncRun> {
    config.validate()?;
    let solver = &config.solver;
    solver.check_dimensions(problem.n_features())?;
    let gamma = problem.step_size(solver.step)?;
    let (n, p) = (problem.n_samples(), problem.n_features());
    let threads = config.threads;
    let order = config.ordering.atomic();
    let update = config.scalar_update;
    let batch = config.counter_batch as u64;
    let every = solver.checkpoint_every.unwrap_or(n) as u64;
    let total = (solver.epochs * n) as u64;

    let x0 = solver.starting_point(p);
    let shared = SharedState::from_parts(&x0, &GradientMemory::zeros(n, p));
    let control = RunControl {
        start: Instant::now(),
        stop: AtomicBool::new(false),
        finished: AtomicUsize::new(0),
        progress: (0..threads).map(|_| Progress::default()).collect(),
        next_checkpoint: AtomicU64::new(every),
        every,
        n: n as f64,
        target: solver.target_objective,
        reference: solver.reference_point.as_deref(),
        checkpoints: Mutex::new(Vec::new()),
    };
    control.push(problem, 0, 0, 0.0, &x0);
    let inline = config.snapshot == SnapshotMode::Inline;

    let worker = |w: usize, quota: u64| -> Vec<usize> {
        let mut sampler = SampleStream::new(solver.seed, w as u64, n);
        let mut ws = Workspace::new(p);
        let mut samples = Vec::new();
        let mut pending = 0u64;
        let flush = |pending: &mut u64| {
            let after = shared.counter_add(*pending) + *pending;
            *pending = 0;
            if inline && control.claim_boundary(after) {
                control.snapshot(problem, &shared);
            }
        };
        for _ in 0..quota {
            if control.stop.load(Ordering::Relaxed) {
                break;
            }
            let i = sampler.next_index();
            if config.record_samples {
                samples.push(i);
            }
            worker_iteration_ordered(problem, &shared, &mut ws, i, gamma, order, update);
            control.progress[w].0.fetch_add(1, Ordering::SeqCst);
            pending += 1;
            if pending == batch {
                flush(&mut pending);
            }
        }
        if pending > 0 {
            flush(&mut pending);
        }
        samples
    };

    let monitor = || {
        let mut due = every;
        loop {
            let done = control.finished.load(Ordering::SeqCst) == threads;
            if control.performed() >= due {
                control.snapshot(problem, &shared);
                due = (control.performed() / every + 1) * every;
            }
            if done || control.stop.load(Ordering::SeqCst) {
                break;
            }
            thread::sleep(Duration::from_micros(20));
        }
    };

    let outcome: Result<Vec<Vec<usize>>> = thread::scope(|s| {
        let mut handles = Vec::with_capacity(threads);
        let mut spawn_error = None;
        for (w, quota) in quotas(total, threads).into_iter().enumerate() {
            let worker = &worker;
            let control = &control;
            let spawned = thread::Builder::new()
                .name(format!("proxasaga-worker-{w}"))
                .spawn_scoped(s, move || {
                    let result = panic::catch_unwind(AssertUnwindSafe(|| worker(w, quota)));
                    if result.is_err() {
                        control.stop.store(true, Ordering::SeqCst);
                    }
                    control.finished.fetch_add(1, Ordering::SeqCst);
                    result
                });
            match spawned {
                Ok(h) => handles.push(h),
                Err(e) => {
                    control.stop.store(true, Ordering::SeqCst);
                    control.finished.fetch_add(threads - w, Ordering::SeqCst);
                    spawn_error = Some(Error::Worker(format!("failed to spawn worker {w}: {e}")));
                    break;
                }
            }
        }
        if config.snapshot == SnapshotMode::Monitor && spawn_error.is_none() {
            monitor();
        }
        let mut samples = Vec::with_capacity(threads);
        let mut failure = spawn_error;
        for (w, h) in handles.into_iter().enumerate() {
            match h.join() {
                Ok(Ok(s)) => samples.push(s),
                Ok(Err(payload)) | Err(payload) => {
                    let msg = payload
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| payload.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "unknown panic".into());
                    failure.get_or_insert(Error::Worker(format!("worker {w} panicked: {msg}")));
                }
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(samples),
        }
    });
    let samples = outcome?;

    let wall = control.wall_seconds();
    let total_iterations = control.performed();
    let counter_iterations = shared.counter();
    let final_x = shared.x_snapshot();
    if control
        .checkpoints
        .lock()
        .unwrap()
        .iter()
        .all(|c| c.iterations != total_iterations)
    {
        control.push(
            problem,
            total_iterations,
            counter_iterations,
            wall,
            &final_x,
        );
    }
    let mut checkpoints = control.checkpoints.into_inner().unwrap();
    checkpoints.sort_by_key(|c| c.iterations);
    checkpoints.dedup_by_key(|c| c.iterations);

    let mut memory = shared.memory_snapshot();
    let drift_before_resync = memory.drift(problem.data());
    memory.resync(problem.data());

    Ok(AsyncRun {
        trace: Trace {
            solver: SolverKind::ProxAsaga,
            threads,
            checkpoints,
            final_x,
        },
        memory,
        drift_before_resync,
        sampled: config.record_samples.then_some(samples),
        total_iterations,
        counter_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotas_cover_total() {
        assert_eq!(quotas(10, 3), vec![4, 3, 3]);
        assert_eq!(quotas(9, 3), vec![3, 3, 3]);
        assert_eq!(quotas(2, 4), vec![1, 1, 0, 0]);
        assert_eq!(quotas(1000, 1), vec![1000]);
    }

    #[test]
    fn config_rejects_zero_threads_and_cap() {
        let mut c = AsyncConfig::new(0, SolverConfig::default());
        assert!(c.validate().is_err());
        c.threads = 300;
        assert!(c.validate().is_err());
        c.threads = 4;
        assert!(c.validate().is_ok());
        c.counter_batch = 0;
        assert!(c.validate().is_err());
    }
}
