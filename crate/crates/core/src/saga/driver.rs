use std::time::{Duration, Instant};

use crate::config::SolverConfig;
use crate::error::Result;
use crate::problem::Problem;
use crate::rng::SampleStream;
use crate::trace::{Checkpoint, SolverKind, Trace};

/// A solver that advances by processing one sample at a time.
pub(crate) trait IncrementalSolver {
    fn step(&mut self, i: usize, gamma: f64);
    fn x(&self) -> &[f64];
}

/// Collects checkpoints. Time spent evaluating the objective is excluded
/// from the recorded wall time.
pub(crate) struct Recorder<'c> {
    start: Instant,
    paused: Duration,
    n: f64,
    reference: Option<&'c [f64]>,
    pub checkpoints: Vec<Checkpoint>,
}

impl<'c> Recorder<'c> {
    pub fn new(n: usize, config: &'c SolverConfig) -> Self {
        Self {
            start: Instant::now(),
            paused: Duration::ZERO,
            n: n as f64,
            reference: config.reference_point.as_deref(),
            checkpoints: Vec::new(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        (self.start.elapsed().saturating_sub(self.paused)).as_secs_f64()
    }

    /// Records a checkpoint at `iterations` (epochs derived from `n`).
    pub fn record(
        &mut self,
        problem: &Problem<'_>,
        iterations: u64,
        x: &[f64],
        counter: Option<u64>,
    ) -> f64 {
        self.record_epochs(problem, iterations, iterations as f64 / self.n, x, counter)
    }

    pub fn record_epochs(
        &mut self,
        problem: &Problem<'_>,
        iterations: u64,
        epochs: f64,
        x: &[f64],
        counter: Option<u64>,
    ) -> f64 {
        let wall_seconds = self.elapsed();
        let eval_start = Instant::now();
        let objective = problem.objective(x);
        let distance_sq = self
            .reference
            .map(|r| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum());
        self.checkpoints.push(Checkpoint {
            iterations,
            epochs,
            objective,
            wall_seconds,
            counter_iterations: counter,
            distance_sq,
        });
        self.paused += eval_start.elapsed();
        objective
    }
}

/// Runs `epochs * n` uniformly sampled steps with checkpointing, optional
/// early stopping on stagnation, and an optional objective target.
pub(crate) fn run_incremental<S: IncrementalSolver>(
    problem: &Problem<'_>,
    config: &SolverConfig,
    solver: &mut S,
    kind: SolverKind,
) -> Result<Trace> {
    let gamma = problem.step_size(config.step)?;
    let n = problem.n_samples();
    let every = config.checkpoint_every.unwrap_or(n) as u64;
    let total = (config.epochs * n) as u64;
    let mut sampler = SampleStream::new(config.seed, 0, n);
    let mut rec = Recorder::new(n, config);

    let first = rec.record(problem, 0, solver.x(), None);
    let mut last_epoch_objective = first;
    let reached = |obj: f64| config.target_objective.is_some_and(|t| obj <= t);
    if !reached(first) {
        for t in 1..=total {
            let i = sampler.next_index();
            solver.step(i, gamma);
            let mut current = None;
            if t % every == 0 || t == total {
                let obj = rec.record(problem, t, solver.x(), None);
                if reached(obj) {
                    break;
                }
                current = Some(obj);
            }
            if let Some(tol) = config.tolerance {
                if t % n as u64 == 0 {
                    let obj = match current {
                        Some(obj) => obj,
                        None => rec.record(problem, t, solver.x(), None),
                    };
                    if (last_epoch_objective - obj).abs() < tol {
                        break;
                    }
                    last_epoch_objective = obj;
                }
            }
        }
    }
    Ok(Trace {
        solver: kind,
        threads: 1,
        checkpoints: rec.checkpoints,
        final_x: solver.x().to_vec(),
    })
}
