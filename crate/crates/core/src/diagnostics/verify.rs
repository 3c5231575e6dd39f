//! The property suite run by `proxsaga verify`.
//!
//! Every check returns a [`PropertyResult`] with the largest violation seen
//! and the tolerance it was held to, so a report shows margins and not only
//! pass/fail.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::oracles::DenseOracle;
use super::{
    brute_force_prox, cached_optimum, initial_constant, rate_envelope_check, sequential_rate,
};
use super::{suboptimality, EnvelopeReport, Optimum};
use crate::config::SolverConfig;
use crate::data::{BlockPartition, CsrMatrix, Dataset};
use crate::error::{Error, Result};
use crate::fista::run_fista;
use crate::loss::{Loss, LossKind};
use crate::parallel::{
    atomic_float_add, measure_speedup, run_async, run_async_detailed, AsyncConfig, AtomicF64,
};
use crate::penalty::{phi_value, Penalty};
use crate::problem::Problem;
use crate::rng::stream_rng;
use crate::saga::{
    fixed_point_residual, run_dense_saga, run_sequential, sparse_gradient_estimate, DenseSaga,
    GradientMemory, SparseSaga,
};
use crate::synthetic::{banded_instance, standard_instance, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyGroup {
    /// Closed-form proximal operators.
    Prox,
    /// Unbiasedness of the sparse surrogates and the fixed-point condition.
    Lemma,
    /// Agreement of the sparse solver with reference implementations.
    Oracle,
    /// Convergence rate and precision of the sequential solvers.
    Rate,
    /// Asynchronous solver and atomics.
    Async,
}

impl PropertyGroup {
    pub const ALL: [PropertyGroup; 5] = [
        PropertyGroup::Prox,
        PropertyGroup::Lemma,
        PropertyGroup::Oracle,
        PropertyGroup::Rate,
        PropertyGroup::Async,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyGroup::Prox => "prox",
            PropertyGroup::Lemma => "lemma",
            PropertyGroup::Oracle => "oracle",
            PropertyGroup::Rate => "rate",
            PropertyGroup::Async => "async",
        }
    }
}

impl fmt::Display for PropertyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PropertyGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown property group {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub group: PropertyGroup,
    pub passed: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl PropertyResult {
    fn within(
        name: &str,
        group: PropertyGroup,
        max_violation: f64,
        tolerance: f64,
        detail: String,
    ) -> Self {
        Self {
            name: name.into(),
            group,
            passed: max_violation <= tolerance,
            max_violation,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, group: PropertyGroup, err: &Error) -> Self {
        Self {
            name: name.into(),
            group,
            passed: false,
            max_violation: f64::INFINITY,
            tolerance: 0.0,
            detail: format!("error: {err}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeReport>,
}

/// Signature of a proximal operator under test: `(penalty, v, step)`.
pub type ProxFn<'a> = dyn Fn(&Penalty, &[f64], f64) -> Vec<f64> + 'a;

/// The library's block proximal operator.
pub fn library_prox(penalty: &Penalty, v: &[f64], step: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    penalty.prox_block_in_place(&mut out, step);
    out
}

fn random_penalty(rng: &mut ChaCha8Rng, kind: usize) -> Penalty {
    match kind % 3 {
        0 => Penalty::L1 {
            lambda: rng.gen_range(0.05..2.0),
        },
        1 => Penalty::GroupL2 {
            lambda: rng.gen_range(0.05..2.0),
        },
        _ => {
            let lo = rng.gen_range(-2.0..0.5);
            Penalty::Box {
                lo,
                hi: lo + rng.gen_range(0.0..3.0),
            }
        }
    }
}

/// Largest violation of `v - z in t * subdifferential(h)(z)`, measured in
/// the units of `v`.
pub fn subgradient_violation(penalty: &Penalty, v: &[f64], t: f64, z: &[f64]) -> f64 {
    let r: Vec<f64> = v.iter().zip(z).map(|(a, b)| a - b).collect();
    match *penalty {
        Penalty::Zero => r.iter().fold(0.0, |m, x| m.max(x.abs())),
        Penalty::L1 { lambda } => {
            let c = t * lambda;
            r.iter()
                .zip(z)
                .map(|(&ri, &zi)| {
                    if zi != 0.0 {
                        (ri - c * zi.signum()).abs()
                    } else {
                        (ri.abs() - c).max(0.0)
                    }
                })
                .fold(0.0, f64::max)
        }
        Penalty::GroupL2 { lambda } => {
            let c = t * lambda;
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter()
                    .zip(z)
                    .map(|(&ri, &zi)| (ri - c * zi / norm).abs())
                    .fold(0.0, f64::max)
            } else {
                (r.iter().map(|x| x * x).sum::<f64>().sqrt() - c).max(0.0)
            }
        }
        Penalty::Box { lo, hi } => r
            .iter()
            .zip(z)
            .map(|(&ri, &zi)| {
                let outside = (lo - zi).max(zi - hi).max(0.0);
                let cone = if lo == hi {
                    0.0
                } else if zi <= lo {
                    ri.max(0.0)
                } else if zi >= hi {
                    (-ri).max(0.0)
                } else {
                    ri.abs()
                };
                outside.max(cone)
            })
            .fold(0.0, f64::max),
    }
}

/// Optimality condition of the prox on `cases` random L1, group-l2 and box
/// cases, for the operator `prox`.
pub fn check_prox_characterization(prox: &ProxFn<'_>, cases: usize, seed: u64) -> PropertyResult {
    let mut rng = stream_rng(seed, 0);
    let normal = Normal::new(0.0, 3.0).unwrap();
    let mut worst = 0.0_f64;
    for k in 0..cases {
        let penalty = random_penalty(&mut rng, k);
        let dim = rng.gen_range(1..=6);
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let t = rng.gen_range(0.01..3.0);
        let z = prox(&penalty, &v, t);
        worst = worst.max(subgradient_violation(&penalty, &v, t, &z));
    }
    PropertyResult::within(
        "prox_subgradient_inclusion",
        PropertyGroup::Prox,
        worst,
        1e-12,
        format!("{cases} random cases over l1, group-l2 and box"),
    )
}

/// One-dimensional closed-form prox against grid search.
pub fn check_prox_brute_force(prox: &ProxFn<'_>, cases: usize, seed: u64) -> PropertyResult {
    let mut rng = stream_rng(seed, 1);
    let mut worst = 0.0_f64;
    for k in 0..cases {
        let penalty = match k % 4 {
            3 => Penalty::Zero,
            kind => random_penalty(&mut rng, kind),
        };
        let v = rng.gen_range(-5.0..5.0);
        let t = rng.gen_range(0.05..3.0);
        let z = prox(&penalty, &[v], t)[0];
        worst = worst.max((z - brute_force_prox(&penalty, t, v)).abs());
    }
    PropertyResult::within(
        "prox_brute_force_agreement",
        PropertyGroup::Prox,
        worst,
        1e-5,
        format!("{cases} one-dimensional cases"),
    )
}

/// Random small problem with no dead blocks and a random partition.
fn random_small_instance(rng: &mut ChaCha8Rng) -> (Dataset, BlockPartition) {
    loop {
        let n = rng.gen_range(2..=50);
        let p = rng.gen_range(2..=20);
        let density = rng.gen_range(0.05..0.6);
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| {
                let mut row = Vec::new();
                for j in 0..p {
                    if rng.gen_bool(density) {
                        row.push((j, rng.gen_range(-2.0..2.0)));
                    }
                }
                row
            })
            .collect();
        let n_blocks = rng.gen_range(1..=p);
        let mut blocks = vec![Vec::new(); n_blocks];
        for j in 0..p {
            // The first coordinates seed each block so none is empty.
            let b = if j < n_blocks {
                j
            } else {
                rng.gen_range(0..n_blocks)
            };
            blocks[b].push(j);
        }
        let labels: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let Ok(matrix) = CsrMatrix::from_rows(p, &rows) else {
            continue;
        };
        let Ok(partition) = BlockPartition::from_blocks(p, blocks) else {
            continue;
        };
        let data = Dataset::new(matrix, labels).expect("labels match rows");
        if crate::data::SupportIndex::build(data.features(), &partition).is_ok() {
            return (data, partition);
        }
    }
}

/// `E_i D_i = I`, `E_i phi_i = h` and `E_i v_i = grad f` averaged over all
/// samples of random small instances.
pub fn check_unbiasedness(instances: usize, seed: u64) -> Vec<PropertyResult> {
    let mut rng = stream_rng(seed, 2);
    let (mut worst_d, mut worst_phi, mut worst_v) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..instances {
        let (data, partition) = random_small_instance(&mut rng);
        let (n, p) = (data.n_samples(), data.n_features());
        let penalty = if k % 2 == 0 {
            Penalty::L1 { lambda: 0.3 }
        } else {
            Penalty::GroupL2 { lambda: 0.3 }
        };
        let loss = Loss::logistic(0.1).unwrap();
        let problem = match Problem::new(&data, loss, penalty, &partition) {
            Ok(p) => p,
            Err(e) => {
                return vec![PropertyResult::failed(
                    "unbiased_reweighting",
                    PropertyGroup::Lemma,
                    &e,
                )]
            }
        };
        let oracle = DenseOracle::new(&data, loss, &partition);
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // E D_i: coordinate j gets d_B whenever its block is in T_i.
        let index = problem.index();
        let mut mean_d = vec![0.0; p];
        for i in 0..n {
            for &b in index.extended_support(i) {
                for &j in partition.block(b) {
                    mean_d[j] += index.block_weights()[b];
                }
            }
        }
        for d in &mean_d {
            worst_d = worst_d.max((d / n as f64 - 1.0).abs());
        }

        let mean_phi = (0..n)
            .map(|i| phi_value(&penalty, &partition, index, i, &x))
            .sum::<f64>()
            / n as f64;
        worst_phi = worst_phi.max((mean_phi - penalty.value(&x, &partition)).abs());

        let scalars: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let memory = GradientMemory::from_scalars(&data, scalars);
        let mut mean_v = vec![0.0; p];
        for i in 0..n {
            let v = sparse_gradient_estimate(&problem, &memory, &x, i);
            for (&j, &vj) in v.indices.iter().zip(&v.values) {
                mean_v[j] += vj;
            }
        }
        for (mv, g) in mean_v.iter().zip(oracle.gradient(&x)) {
            worst_v = worst_v.max((mv / n as f64 - g).abs());
        }
    }
    let detail = format!("{instances} random instances, n <= 50, p <= 20");
    vec![
        PropertyResult::within(
            "unbiased_reweighting",
            PropertyGroup::Lemma,
            worst_d,
            1e-12,
            detail.clone(),
        ),
        PropertyResult::within(
            "unbiased_penalty_surrogate",
            PropertyGroup::Lemma,
            worst_phi,
            1e-12,
            detail.clone(),
        ),
        PropertyResult::within(
            "unbiased_gradient_estimate",
            PropertyGroup::Lemma,
            worst_v,
            1e-12,
            detail,
        ),
    ]
}

/// Residual of the fixed-point equation at the cached optimum.
pub fn check_fixed_point(problem: &Problem<'_>, optimum: &Optimum) -> PropertyResult {
    let name = "fixed_point_residual";
    match problem
        .step_size(Default::default())
        .and_then(|g| fixed_point_residual(problem, &optimum.x, g))
    {
        Ok(r) => PropertyResult::within(
            name,
            PropertyGroup::Lemma,
            r,
            1e-8,
            "at the cached optimum".into(),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Lemma, &e),
    }
}

/// Under a single-block partition the sparse and dense solvers take the
/// same steps.
pub fn check_single_block_equivalence(
    instance: &Instance,
    seeds: u64,
    epochs: usize,
) -> PropertyResult {
    let name = "single_block_matches_dense";
    let run = || -> Result<f64> {
        let partition = BlockPartition::single_block(instance.data.n_features())?;
        let problem = Problem::new(&instance.data, instance.loss, instance.penalty, &partition)?;
        let gamma = problem.step_size(Default::default())?;
        let n = problem.n_samples();
        let mut worst = 0.0_f64;
        for seed in 0..seeds {
            let mut sparse = SparseSaga::new(&problem);
            let mut dense = DenseSaga::new(&problem);
            let mut sampler = crate::rng::SampleStream::new(seed, 0, n);
            for _ in 0..epochs * n {
                let i = sampler.next_index();
                sparse.step(i, gamma);
                dense.step(i, gamma);
                let diff = sparse
                    .x()
                    .iter()
                    .zip(dense.x())
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(diff);
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => PropertyResult::within(
            name,
            PropertyGroup::Oracle,
            w,
            1e-14,
            format!("{seeds} seeds x {epochs} epochs, max-norm per iterate"),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Oracle, &e),
    }
}

/// With `h = 0` the sparse solver matches a dense no-prox reference.
pub fn check_zero_penalty_equivalence(
    instance: &Instance,
    seed: u64,
    epochs: usize,
) -> PropertyResult {
    let name = "zero_penalty_matches_no_prox";
    let run = || -> Result<f64> {
        let problem = Problem::new(
            &instance.data,
            instance.loss,
            Penalty::Zero,
            &instance.partition,
        )?;
        let gamma = problem.step_size(Default::default())?;
        let oracle = DenseOracle::new(&instance.data, instance.loss, &instance.partition);
        let weights = oracle.coordinate_weights();
        let (n, p) = (problem.n_samples(), problem.n_features());
        let mut solver = SparseSaga::new(&problem);
        let (mut x, mut scalars, mut avg) = (vec![0.0; p], vec![0.0; n], vec![0.0; p]);
        let mut sampler = crate::rng::SampleStream::new(seed, 0, n);
        let mut worst = 0.0_f64;
        for _ in 0..epochs * n {
            let i = sampler.next_index();
            solver.step(i, gamma);
            oracle.no_prox_step(&weights, &mut x, &mut scalars, &mut avg, i, gamma);
            let diff = solver
                .x()
                .iter()
                .zip(&x)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff);
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => PropertyResult::within(
            name,
            PropertyGroup::Oracle,
            w,
            1e-14,
            format!("{epochs} epochs"),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Oracle, &e),
    }
}

/// Median over seeds of `||x_t - x*||^2` against the geometric envelope.
pub fn check_rate_envelope(
    problem: &Problem<'_>,
    optimum: &Optimum,
    seeds: u64,
    epochs: usize,
    slack: f64,
) -> (PropertyResult, Option<EnvelopeReport>) {
    let name = "rate_envelope";
    let run = || -> Result<EnvelopeReport> {
        let mut runs = Vec::new();
        for seed in 0..seeds {
            let config = SolverConfig {
                epochs,
                seed,
                reference_point: Some(optimum.x.clone()),
                ..SolverConfig::default()
            };
            let trace = run_sequential(problem, &config)?;
            runs.push(
                trace
                    .checkpoints
                    .iter()
                    .map(|c| (c.iterations, c.distance_sq.unwrap_or(f64::NAN)))
                    .collect(),
            );
        }
        let rho = sequential_rate(problem, 1.0);
        let c0 = initial_constant(problem, &vec![0.0; problem.n_features()], &optimum.x);
        rate_envelope_check(&runs, rho, c0, slack)
    };
    match run() {
        Ok(report) => {
            let worst = report
                .entries
                .iter()
                .map(|e| e.median / e.bound)
                .fold(0.0, f64::max);
            let result = PropertyResult::within(
                name,
                PropertyGroup::Rate,
                worst,
                1.0,
                format!(
                    "largest median/bound ratio over {} checkpoints; rho = {:e}, C0 = {:e}",
                    report.entries.len(),
                    report.rho,
                    report.c0
                ),
            );
            (result, Some(report))
        }
        Err(e) => (PropertyResult::failed(name, PropertyGroup::Rate, &e), None),
    }
}

/// Smallest suboptimality reached within `epochs`.
pub fn check_sequential_precision(
    problem: &Problem<'_>,
    optimum: &Optimum,
    epochs: usize,
) -> PropertyResult {
    let name = "sequential_precision";
    let run = || -> Result<f64> {
        let trace = run_sequential(
            problem,
            &SolverConfig {
                epochs,
                ..SolverConfig::default()
            },
        )?;
        Ok(suboptimality(&trace, optimum.objective)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    };
    match run() {
        Ok(s) => PropertyResult::within(
            name,
            PropertyGroup::Rate,
            s,
            1e-10,
            format!("best within {epochs} epochs"),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Rate, &e),
    }
}

/// Final objectives of the sparse solver, dense SAGA and FISTA.
pub fn check_cross_solver(problem: &Problem<'_>) -> PropertyResult {
    let name = "cross_solver_agreement";
    let run = || -> Result<(f64, String)> {
        let saga = SolverConfig {
            epochs: 200,
            ..SolverConfig::default()
        };
        let a = run_sequential(problem, &saga)?.final_objective();
        let b = run_dense_saga(problem, &saga)?.final_objective();
        let c = run_fista(
            problem,
            &SolverConfig {
                epochs: 1000,
                ..SolverConfig::default()
            },
        )?
        .final_objective();
        let spread = a.max(b).max(c) - a.min(b).min(c);
        Ok((
            spread,
            format!("sparse {a:.15}, dense {b:.15}, fista {c:.15}"),
        ))
    };
    match run() {
        Ok((s, d)) => PropertyResult::within(name, PropertyGroup::Rate, s, 1e-9, d),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Rate, &e),
    }
}

/// Seeded asynchronous runs all reach `1e-8` suboptimality.
pub fn check_async_convergence(
    problem: &Problem<'_>,
    optimum: &Optimum,
    threads: &[usize],
    runs: u64,
    epochs: usize,
) -> PropertyResult {
    let name = "async_convergence";
    let run = || -> Result<(f64, usize)> {
        let mut worst = 0.0_f64;
        let mut count = 0;
        for &t in threads {
            for seed in 0..runs {
                let config = AsyncConfig::new(
                    t,
                    SolverConfig {
                        epochs,
                        seed,
                        ..SolverConfig::default()
                    },
                );
                let trace = run_async(problem, &config)?;
                let best = suboptimality(&trace, optimum.objective)?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
                count += 1;
            }
        }
        Ok((worst, count))
    };
    match run() {
        Ok((w, count)) => PropertyResult::within(
            name,
            PropertyGroup::Async,
            w,
            1e-8,
            format!("worst best-suboptimality over {count} runs, threads {threads:?}"),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Async, &e),
    }
}

/// A one-worker asynchronous run replays the sequential run.
pub fn check_async_single_thread(
    problem: &Problem<'_>,
    seed: u64,
    epochs: usize,
) -> PropertyResult {
    let name = "async_single_thread_matches_sequential";
    let run = || -> Result<f64> {
        let solver = SolverConfig {
            epochs,
            seed,
            ..SolverConfig::default()
        };
        let seq = run_sequential(problem, &solver)?;
        let par = run_async(problem, &AsyncConfig::new(1, solver))?;
        Ok(seq
            .final_x
            .iter()
            .zip(&par.final_x)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    };
    match run() {
        Ok(w) => PropertyResult::within(
            name,
            PropertyGroup::Async,
            w,
            1e-14,
            format!("{epochs} epochs"),
        ),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Async, &e),
    }
}

/// Coordinates of `x` outside every sampled extended support, and memory
/// scalars of unsampled rows, are bit-identical after an asynchronous run.
pub fn check_write_sparsity(threads: usize, seed: u64) -> PropertyResult {
    let name = "no_write_outside_support";
    let run = || -> Result<(f64, String)> {
        // 200 disjoint rows of 10 columns: one epoch leaves about a third
        // of the rows, and so of the columns, unsampled.
        let data = crate::synthetic::gen_banded_glm(200, 2000, 10, seed, LossKind::Logistic)?;
        let partition = BlockPartition::singleton(2000)?;
        let problem = Problem::new(
            &data,
            Loss::logistic(0.005)?,
            Penalty::l1(0.01)?,
            &partition,
        )?;
        let mut rng = stream_rng(seed, 3);
        let x0: Vec<f64> = (0..2000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut config = AsyncConfig::new(
            threads,
            SolverConfig {
                epochs: 1,
                seed,
                initial_x: Some(x0.clone()),
                ..SolverConfig::default()
            },
        );
        config.record_samples = true;
        let result = run_async_detailed(&problem, &config)?;
        let sampled = result.sampled.unwrap_or_default();
        let mut touched = vec![false; 2000];
        let mut sampled_rows = [false; 200];
        for &i in sampled.iter().flatten() {
            sampled_rows[i] = true;
            for &b in problem.index().extended_support(i) {
                for &j in partition.block(b) {
                    touched[j] = true;
                }
            }
        }
        let mut modified = 0usize;
        let mut untouched = 0usize;
        for j in 0..2000 {
            if !touched[j] {
                untouched += 1;
                if result.trace.final_x[j].to_bits() != x0[j].to_bits() {
                    modified += 1;
                }
            }
        }
        for (i, &s) in sampled_rows.iter().enumerate() {
            if !s && result.memory.scalars()[i].to_bits() != 0.0_f64.to_bits() {
                modified += 1;
            }
        }
        if untouched == 0 {
            return Err(Error::InvalidArgument(
                "every coordinate was sampled; check is vacuous".into(),
            ));
        }
        Ok((
            modified as f64,
            format!("{untouched} coordinates outside all sampled supports"),
        ))
    };
    match run() {
        Ok((m, d)) => PropertyResult::within(name, PropertyGroup::Async, m, 0.0, d),
        Err(e) => PropertyResult::failed(name, PropertyGroup::Async, &e),
    }
}

/// Concurrent atomic adds of 1.0 sum exactly.
pub fn check_atomic_exactness(threads: usize, adds: usize) -> PropertyResult {
    let cell = AtomicF64::new(0.0);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| {
                for _ in 0..adds {
                    atomic_float_add(&cell, 1.0);
                }
            });
        }
    });
    let total = cell.into_inner();
    let expected = (threads * adds) as f64;
    PropertyResult::within(
        "atomic_add_exactness",
        PropertyGroup::Async,
        (total - expected).abs(),
        0.0,
        format!("{threads} threads x {adds} adds, total {total}"),
    )
}

/// Iteration-count speedup of 4 workers on the banded instance.
pub fn check_theoretical_speedup(
    problem: &Problem<'_>,
    optimum: &Optimum,
    repeats: usize,
) -> PropertyResult {
    let name = "theoretical_speedup";
    let config = AsyncConfig::new(
        1,
        SolverConfig {
            epochs: 300,
            checkpoint_every: Some(200),
            ..SolverConfig::default()
        },
    );
    match measure_speedup(problem, &config, &[1, 4], 1e-6, optimum.objective, repeats) {
        Ok(table) => {
            let s = table.rows[1].theoretical_speedup;
            let shortfall = if s.is_nan() {
                f64::INFINITY
            } else {
                (3.0 - s).max(0.0)
            };
            PropertyResult::within(
                name,
                PropertyGroup::Async,
                shortfall,
                0.0,
                format!("4 cores: {s:.3} (need >= 3.0), delta = {}", table.delta),
            )
        }
        Err(e) => PropertyResult::failed(name, PropertyGroup::Async, &e),
    }
}

fn with_instance<F>(
    name: &str,
    group: PropertyGroup,
    build: fn() -> Result<Instance>,
    f: F,
) -> Vec<PropertyResult>
where
    F: FnOnce(&Instance, &Problem<'_>, &Optimum) -> Vec<PropertyResult>,
{
    let instance = match build() {
        Ok(i) => i,
        Err(e) => return vec![PropertyResult::failed(name, group, &e)],
    };
    let problem = match instance.problem() {
        Ok(p) => p,
        Err(e) => return vec![PropertyResult::failed(name, group, &e)],
    };
    match cached_optimum(&problem) {
        Ok(opt) => f(&instance, &problem, &opt),
        Err(e) => vec![PropertyResult::failed(name, group, &e)],
    }
}

/// Runs the whole suite, or one group of it.
pub fn run_suite(only: Option<PropertyGroup>) -> VerifyReport {
    let wanted = |g: PropertyGroup| only.is_none_or(|o| o == g);
    let mut properties = Vec::new();
    let mut envelope = None;
    let prox: &ProxFn<'_> = &library_prox;

    if wanted(PropertyGroup::Prox) {
        properties.push(check_prox_characterization(prox, 300, 0));
        properties.push(check_prox_brute_force(prox, 100, 0));
    }
    if wanted(PropertyGroup::Lemma) {
        properties.extend(check_unbiasedness(20, 0));
        properties.extend(with_instance(
            "fixed_point_residual",
            PropertyGroup::Lemma,
            standard_instance,
            |_, problem, opt| vec![check_fixed_point(problem, opt)],
        ));
    }
    if wanted(PropertyGroup::Oracle) {
        match standard_instance() {
            Ok(inst) => {
                properties.push(check_single_block_equivalence(&inst, 3, 3));
                properties.push(check_zero_penalty_equivalence(&inst, 0, 3));
            }
            Err(e) => properties.push(PropertyResult::failed(
                "oracle_instance",
                PropertyGroup::Oracle,
                &e,
            )),
        }
    }
    if wanted(PropertyGroup::Rate) {
        properties.extend(with_instance(
            "rate_instance",
            PropertyGroup::Rate,
            standard_instance,
            |_, problem, opt| {
                let (r, report) = check_rate_envelope(problem, opt, 10, 100, 10.0);
                envelope = report;
                vec![
                    r,
                    check_sequential_precision(problem, opt, 150),
                    check_cross_solver(problem),
                ]
            },
        ));
    }
    if wanted(PropertyGroup::Async) {
        properties.push(check_atomic_exactness(8, 100_000));
        properties.push(check_write_sparsity(4, 0));
        properties.extend(with_instance(
            "async_instance",
            PropertyGroup::Async,
            standard_instance,
            |_, problem, opt| {
                vec![
                    check_async_single_thread(problem, 0, 20),
                    check_async_convergence(problem, opt, &[2, 4], 10, 150),
                ]
            },
        ));
        properties.extend(with_instance(
            "speedup_instance",
            PropertyGroup::Async,
            banded_instance,
            |_, problem, opt| vec![check_theoretical_speedup(problem, opt, 3)],
        ));
    }
    VerifyReport {
        passed: properties.iter().all(|p| p.passed),
        properties,
        envelope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_round_trip() {
        for g in PropertyGroup::ALL {
            assert_eq!(g.name().parse::<PropertyGroup>().unwrap(), g);
        }
        assert!("everything".parse::<PropertyGroup>().is_err());
    }

    #[test]
    fn prox_suite_passes_for_library_prox() {
        assert!(check_prox_characterization(&library_prox, 300, 5).passed);
        assert!(check_prox_brute_force(&library_prox, 100, 5).passed);
    }

    #[test]
    fn sign_bug_in_soft_threshold_is_caught() {
        // Drops the sign of the input.
        let buggy = |penalty: &Penalty, v: &[f64], t: f64| -> Vec<f64> {
            match *penalty {
                Penalty::L1 { lambda } => {
                    v.iter().map(|&x| (x.abs() - t * lambda).max(0.0)).collect()
                }
                _ => library_prox(penalty, v, t),
            }
        };
        assert!(!check_prox_characterization(&buggy, 300, 5).passed);
    }

    #[test]
    fn violation_measures() {
        let l1 = Penalty::L1 { lambda: 1.0 };
        assert_eq!(subgradient_violation(&l1, &[3.0], 1.0, &[2.0]), 0.0);
        assert_eq!(subgradient_violation(&l1, &[0.5], 1.0, &[0.0]), 0.0);
        assert_eq!(subgradient_violation(&l1, &[3.0], 1.0, &[2.5]), 0.5);
        let b = Penalty::Box { lo: 0.0, hi: 1.0 };
        assert_eq!(subgradient_violation(&b, &[2.0], 1.0, &[1.0]), 0.0);
        assert_eq!(subgradient_violation(&b, &[2.0], 1.0, &[0.0]), 2.0);
    }
}
