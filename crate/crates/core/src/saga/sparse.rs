use super::driver::{run_incremental, IncrementalSolver};
use super::kernel::{apply, gather, ReadOnly, VecAccess, Workspace};
use super::memory::GradientMemory;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::loss::smooth_gradient;
use crate::problem::Problem;
use crate::trace::{SolverKind, Trace};

/// Sparse vector restricted to an extended support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn to_dense(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }
}

/// Sequential Sparse Proximal SAGA state: iterate, memory and scratch.
#[derive(Debug, Clone)]
pub struct SparseSaga<'p, 'a> {
    problem: &'p Problem<'a>,
    x: Vec<f64>,
    memory: GradientMemory,
    workspace: Workspace,
}

impl<'p, 'a> SparseSaga<'p, 'a> {
    /// Starts from `x = 0` and an all-zero memory.
    pub fn new(problem: &'p Problem<'a>) -> Self {
        let (n, p) = (problem.n_samples(), problem.n_features());
        Self::from_state(problem, vec![0.0; p], GradientMemory::zeros(n, p))
    }

    pub fn from_state(problem: &'p Problem<'a>, x: Vec<f64>, memory: GradientMemory) -> Self {
        assert_eq!(x.len(), problem.n_features());
        assert_eq!(memory.n_samples(), problem.n_samples());
        let workspace = Workspace::new(problem.n_features());
        Self {
            problem,
            x,
            memory,
            workspace,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn memory(&self) -> &GradientMemory {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut GradientMemory {
        &mut self.memory
    }

    pub fn into_parts(self) -> (Vec<f64>, GradientMemory) {
        (self.x, self.memory)
    }

    /// `x+ = prox_{gamma phi_i}(x - gamma v_i)` and `alpha_i+ = grad f_i(x)`.
    /// Only coordinates in the blocks of `T_i` are written.
    pub fn step(&mut self, i: usize, gamma: f64) {
        let (scalars, avg) = self.memory.split_mut();
        let mut access = VecAccess {
            x: &mut self.x,
            avg,
            scalars,
        };
        gather(self.problem, &access, &mut self.workspace, i);
        apply(self.problem, &mut access, &mut self.workspace, i, gamma);
    }
}

impl IncrementalSolver for SparseSaga<'_, '_> {
    fn step(&mut self, i: usize, gamma: f64) {
        SparseSaga::step(self, i, gamma)
    }

    fn x(&self) -> &[f64] {
        &self.x
    }
}

/// Gradient estimate of sample `i` at `x`, supported on the coordinates of `T_i`:
/// `v_i = grad f_i(x) - alpha_i + D_i (avg + lambda1 x)`.
pub fn sparse_gradient_estimate(
    problem: &Problem<'_>,
    memory: &GradientMemory,
    x: &[f64],
    i: usize,
) -> SparseVector {
    let mut ws = Workspace::new(problem.n_features());
    let access = ReadOnly {
        x,
        avg: memory.avg(),
        scalars: memory.scalars(),
    };
    gather(problem, &access, &mut ws, i);
    SparseVector {
        indices: ws.coords().to_vec(),
        values: ws.estimate().to_vec(),
    }
}

/// One Sparse Proximal SAGA step on caller-owned state.
pub fn sps_step(
    problem: &Problem<'_>,
    x: &mut [f64],
    memory: &mut GradientMemory,
    i: usize,
    gamma: f64,
) {
    let mut ws = Workspace::new(problem.n_features());
    let (scalars, avg) = memory.split_mut();
    let mut access = VecAccess { x, avg, scalars };
    gather(problem, &access, &mut ws, i);
    apply(problem, &mut access, &mut ws, i, gamma);
}

/// Runs Sparse Proximal SAGA from `x0` (zero by default) with zero memory.
pub fn run_sequential(problem: &Problem<'_>, config: &SolverConfig) -> Result<Trace> {
    config.validate()?;
    config.check_dimensions(problem.n_features())?;
    let (n, p) = (problem.n_samples(), problem.n_features());
    let mut solver = SparseSaga::from_state(
        problem,
        config.starting_point(p),
        GradientMemory::zeros(n, p),
    );
    run_incremental(problem, config, &mut solver, SolverKind::SparseSaga)
}

/// `||x - prox_{gamma phi}(x - gamma D grad f(x))||` with `phi = sum_B d_B h_B`
/// and `D` the block-diagonal `d_B` scaling. Zero exactly at solutions.
pub fn fixed_point_residual(problem: &Problem<'_>, x: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if x.len() != problem.n_features() {
        return Err(Error::DimensionMismatch {
            expected: problem.n_features(),
            got: x.len(),
        });
    }
    let grad = smooth_gradient(problem.data(), problem.loss(), x);
    let d = problem.index().coord_weights();
    let mut z: Vec<f64> = (0..x.len())
        .map(|j| x[j] - gamma * d[j] * grad[j])
        .collect();
    problem.penalty().prox_weighted_in_place(
        &mut z,
        gamma,
        problem.partition(),
        Some(problem.index().block_weights()),
    );
    Ok(x.iter()
        .zip(&z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}
