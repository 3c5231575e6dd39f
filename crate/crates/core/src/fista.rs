//! FISTA with backtracking line search: the synchronous full-gradient
//! baseline.

use std::thread;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::loss::accumulate_data_gradient;
use crate::problem::Problem;
use crate::saga::Recorder;
use crate::trace::{SolverKind, Trace};

/// Doublings of the Lipschitz estimate allowed within one step.
pub const MAX_DOUBLINGS: usize = 60;

/// Slack in the sufficient-decrease test, absorbing rounding in `f`.
pub const DECREASE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FistaState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub current_l: f64,
}

impl FistaState {
    /// `x = y = x0`, `t = 1`, and a starting Lipschitz estimate.
    pub fn new(x0: Vec<f64>, initial_l: f64) -> Self {
        Self {
            y: x0.clone(),
            x: x0,
            t: 1.0,
            current_l: initial_l,
        }
    }

    /// Starting point for `problem`: zero, with `L / 100` as the estimate.
    pub fn for_problem(problem: &Problem<'_>) -> Self {
        Self::new(vec![0.0; problem.n_features()], problem.lipschitz() / 100.0)
    }
}

/// Smooth part `f` and its gradient, with the data term split over
/// `threads` contiguous row ranges. Partial results are summed in range
/// order, so the output does not depend on thread timing.
fn value_and_gradient(problem: &Problem<'_>, x: &[f64], threads: usize) -> (f64, Vec<f64>) {
    let data = problem.data();
    let loss = problem.loss();
    let (n, p) = (problem.n_samples(), problem.n_features());
    let (mut value, mut grad) = if threads <= 1 {
        let mut g = vec![0.0; p];
        let v = accumulate_data_gradient(data, loss, x, 0..n, &mut g);
        (v, g)
    } else {
        let chunk = n.div_ceil(threads);
        let parts: Vec<(f64, Vec<f64>)> = thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|start| {
                    let rows = start..(start + chunk).min(n);
                    s.spawn(move || {
                        let mut g = vec![0.0; p];
                        let v = accumulate_data_gradient(data, loss, x, rows, &mut g);
                        (v, g)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("gradient worker panicked"))
                .collect()
        });
        let mut g = vec![0.0; p];
        let mut v = 0.0;
        for (pv, pg) in parts {
            v += pv;
            g.iter_mut().zip(&pg).for_each(|(a, b)| *a += b);
        }
        (v, g)
    };
    let inv_n = 1.0 / n as f64;
    let lambda1 = loss.lambda1;
    value *= inv_n;
    value += 0.5 * lambda1 * x.iter().map(|v| v * v).sum::<f64>();
    for (g, &xj) in grad.iter_mut().zip(x) {
        *g = *g * inv_n + lambda1 * xj;
    }
    (value, grad)
}

fn smooth_value(problem: &Problem<'_>, x: &[f64], threads: usize) -> f64 {
    if threads <= 1 {
        crate::loss::smooth_objective(problem.data(), problem.loss(), x)
    } else {
        value_and_gradient(problem, x, threads).0
    }
}

/// One accelerated proximal gradient step with backtracking on the
/// Lipschitz estimate.
pub fn fista_step(state: &mut FistaState, problem: &Problem<'_>) -> Result<()> {
    fista_step_threads(state, problem, 1)
}

/// [`fista_step`] with the gradient computed on `threads` threads.
pub fn fista_step_threads(
    state: &mut FistaState,
    problem: &Problem<'_>,
    threads: usize,
) -> Result<()> {
    if !(state.current_l > 0.0 && state.current_l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz estimate must be positive, got {}",
            state.current_l
        )));
    }
    let (fy, grad) = value_and_gradient(problem, &state.y, threads);
    let mut doublings = 0;
    let x_next = loop {
        let l = state.current_l;
        let z: Vec<f64> = state.y.iter().zip(&grad).map(|(y, g)| y - g / l).collect();
        let cand = problem.penalty().prox(&z, 1.0 / l, problem.partition());
        let mut inner = 0.0;
        let mut dist = 0.0;
        for ((c, y), g) in cand.iter().zip(&state.y).zip(&grad) {
            let d = c - y;
            inner += g * d;
            dist += d * d;
        }
        let bound = fy + inner + 0.5 * l * dist + DECREASE_SLACK;
        if smooth_value(problem, &cand, threads) <= bound {
            break cand;
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::BacktrackingFailed(MAX_DOUBLINGS));
        }
        state.current_l *= 2.0;
        doublings += 1;
    };
    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * state.t * state.t).sqrt());
    let momentum = (state.t - 1.0) / t_next;
    for ((y, &xn), &xo) in state.y.iter_mut().zip(&x_next).zip(&state.x) {
        *y = xn + momentum * (xn - xo);
    }
    state.x = x_next;
    state.t = t_next;
    Ok(())
}

/// Runs `config.epochs` FISTA iterations from `x = 0` (or `initial_x`).
/// Each iteration costs one full gradient, so it counts as one epoch.
pub fn run_fista(problem: &Problem<'_>, config: &SolverConfig) -> Result<Trace> {
    run_fista_threads(problem, config, 1)
}

/// [`run_fista`] with a fork-join gradient over `threads` threads.
pub fn run_fista_threads(
    problem: &Problem<'_>,
    config: &SolverConfig,
    threads: usize,
) -> Result<Trace> {
    config.validate()?;
    config.check_dimensions(problem.n_features())?;
    if threads == 0 {
        return Err(Error::InvalidArgument("threads must be at least 1".into()));
    }
    let mut state = FistaState::new(
        config.starting_point(problem.n_features()),
        problem.lipschitz() / 100.0,
    );
    let every = config.checkpoint_every.unwrap_or(1) as u64;
    let total = config.epochs as u64;
    let reached = |obj: f64| config.target_objective.is_some_and(|t| obj <= t);
    let mut rec = Recorder::new(problem.n_samples(), config);
    let mut previous = rec.record_epochs(problem, 0, 0.0, &state.x, None);
    if !reached(previous) {
        for k in 1..=total {
            fista_step_threads(&mut state, problem, threads)?;
            if k % every == 0 || k == total {
                let obj = rec.record_epochs(problem, k, k as f64, &state.x, None);
                if reached(obj) {
                    break;
                }
                if config
                    .tolerance
                    .is_some_and(|tol| every == 1 && (previous - obj).abs() < tol)
                {
                    break;
                }
                previous = obj;
            }
        }
    }
    Ok(Trace {
        solver: SolverKind::Fista,
        threads,
        checkpoints: rec.checkpoints,
        final_x: state.x,
    })
}
