use super::driver::{run_incremental, IncrementalSolver};
use super::memory::GradientMemory;
use crate::config::SolverConfig;
use crate::error::Result;
use crate::problem::Problem;
use crate::trace::{SolverKind, Trace};

/// Textbook proximal SAGA: dense gradient estimate and a full prox of `h`
/// every iteration. Serves as the reference the sparse solver is checked
/// against and as the high-precision optimum generator.
#[derive(Debug, Clone)]
pub struct DenseSaga<'p, 'a> {
    problem: &'p Problem<'a>,
    x: Vec<f64>,
    memory: GradientMemory,
    u: Vec<f64>,
}

impl<'p, 'a> DenseSaga<'p, 'a> {
    pub fn new(problem: &'p Problem<'a>) -> Self {
        let (n, p) = (problem.n_samples(), problem.n_features());
        Self::from_state(problem, vec![0.0; p], GradientMemory::zeros(n, p))
    }

    pub fn from_state(problem: &'p Problem<'a>, x: Vec<f64>, memory: GradientMemory) -> Self {
        assert_eq!(x.len(), problem.n_features());
        let u = vec![0.0; x.len()];
        Self {
            problem,
            x,
            memory,
            u,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn memory(&self) -> &GradientMemory {
        &self.memory
    }

    pub fn step(&mut self, i: usize, gamma: f64) {
        dense_step(
            self.problem,
            &mut self.x,
            &mut self.memory,
            &mut self.u,
            i,
            gamma,
        );
    }
}

impl IncrementalSolver for DenseSaga<'_, '_> {
    fn step(&mut self, i: usize, gamma: f64) {
        DenseSaga::step(self, i, gamma)
    }

    fn x(&self) -> &[f64] {
        &self.x
    }
}

fn dense_step(
    problem: &Problem<'_>,
    x: &mut [f64],
    memory: &mut GradientMemory,
    u: &mut [f64],
    i: usize,
    gamma: f64,
) {
    let data = problem.data();
    let row = data.features().row(i);
    let lambda1 = problem.loss().lambda1;
    let new_scalar = problem.loss().kind.derivative(row.dot(x), data.labels()[i]);
    let old_scalar = memory.scalars()[i];
    let delta = new_scalar - old_scalar;

    // u = grad f_i(x) - alpha_i + avg + lambda1 x
    for ((uj, &aj), &xj) in u.iter_mut().zip(memory.avg()).zip(x.iter()) {
        *uj = aj + lambda1 * xj;
    }
    for (j, a) in row.iter() {
        u[j] += delta * a;
    }
    for (xj, &uj) in x.iter_mut().zip(u.iter()) {
        *xj -= gamma * uj;
    }
    problem
        .penalty()
        .prox_weighted_in_place(x, gamma, problem.partition(), None);
    memory.update(data, i, new_scalar);
}

/// One dense SAGA step on caller-owned state.
pub fn dense_saga_step(
    problem: &Problem<'_>,
    x: &mut [f64],
    memory: &mut GradientMemory,
    i: usize,
    gamma: f64,
) {
    let mut u = vec![0.0; x.len()];
    dense_step(problem, x, memory, &mut u, i, gamma);
}

/// Runs dense SAGA with the same sampling stream as [`super::run_sequential`].
pub fn run_dense_saga(problem: &Problem<'_>, config: &SolverConfig) -> Result<Trace> {
    config.validate()?;
    config.check_dimensions(problem.n_features())?;
    let (n, p) = (problem.n_samples(), problem.n_features());
    let mut solver = DenseSaga::from_state(
        problem,
        config.starting_point(p),
        GradientMemory::zeros(n, p),
    );
    run_incremental(problem, config, &mut solver, SolverKind::DenseSaga)
}
