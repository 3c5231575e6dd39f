//! Seeded generators for test problems with controlled sparsity.
//!
//! Every generator is a pure function of its arguments: the same inputs give
//! byte-identical datasets.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::data::{BlockPartition, CsrMatrix, Dataset};
use crate::error::{Error, Result};
use crate::loss::{smooth_gradient, Loss, LossKind};
use crate::penalty::Penalty;
use crate::problem::Problem;
use crate::rng::stream_rng;
use crate::saga::run_sequential;

/// Fraction of logistic labels flipped at random.
pub const LABEL_NOISE: f64 = 0.05;

/// Fraction of nonzero coefficients in the planted model.
pub const PLANTED_DENSITY: f64 = 0.1;

/// Nonzeros per row for a target density: `max(1, round(density * p))`.
pub fn row_nnz(density: f64, p: usize) -> usize {
    ((density * p as f64).round() as usize).clamp(1, p)
}

fn check_shape(n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!(
            "generator needs n > 0 and p > 0, got n = {n}, p = {p}"
        )));
    }
    Ok(())
}

fn planted_model(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let k = row_nnz(PLANTED_DENSITY, p);
    let mut w = vec![0.0; p];
    for j in sample(rng, p, k).into_iter() {
        w[j] = rng.sample(StandardNormal);
    }
    w
}

/// Labels from the planted model: the sign of the margin with
/// [`LABEL_NOISE`] random flips for logistic loss, and the margin plus
/// Gaussian noise of standard deviation [`LABEL_NOISE`] for squared loss.
fn planted_labels(
    rng: &mut ChaCha8Rng,
    features: &CsrMatrix,
    w: &[f64],
    kind: LossKind,
) -> Vec<f64> {
    features
        .rows()
        .map(|row| {
            let z = row.dot(w);
            match kind {
                LossKind::Logistic => {
                    let sign = if z > 0.0 {
                        1.0
                    } else if z < 0.0 {
                        -1.0
                    } else if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    };
                    if rng.gen_bool(LABEL_NOISE) {
                        -sign
                    } else {
                        sign
                    }
                }
                LossKind::Squared => z + LABEL_NOISE * rng.sample::<f64, _>(StandardNormal),
            }
        })
        .collect()
}

/// Random sparse design: every row has exactly [`row_nnz`] nonzeros at
/// seeded-random positions with standard normal values. Returns the
/// dataset and the planted coefficients its labels were drawn from.
pub fn gen_sparse_glm_with_truth(
    n: usize,
    p: usize,
    density: f64,
    seed: u64,
    kind: LossKind,
) -> Result<(Dataset, Vec<f64>)> {
    check_shape(n, p)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    let k = row_nnz(density, p);
    let mut rng = stream_rng(seed, 0);
    let w = planted_model(&mut rng, p);
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|_| {
            let mut cols = sample(&mut rng, p, k).into_vec();
            cols.sort_unstable();
            cols.into_iter()
                .map(|j| (j, rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    let features = CsrMatrix::from_rows(p, &rows)?;
    let labels = planted_labels(&mut rng, &features, &w, kind);
    Ok((Dataset::new(features, labels)?, w))
}

pub fn gen_sparse_glm(
    n: usize,
    p: usize,
    density: f64,
    seed: u64,
    kind: LossKind,
) -> Result<Dataset> {
    gen_sparse_glm_with_truth(n, p, density, seed, kind).map(|(d, _)| d)
}

/// Banded design with nearly disjoint supports: row `i` holds `width`
/// consecutive columns (cyclically) starting at `floor(i * p / n)`. Under
/// the singleton partition each column is shared by about `width * n / p`
/// rows, so `delta` is about `width / p`.
pub fn gen_banded_glm_with_truth(
    n: usize,
    p: usize,
    width: usize,
    seed: u64,
    kind: LossKind,
) -> Result<(Dataset, Vec<f64>)> {
    check_shape(n, p)?;
    if width == 0 || width > p {
        return Err(Error::InvalidArgument(format!(
            "width must be in 1..={p}, got {width}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let w = planted_model(&mut rng, p);
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let start = i * p / n;
            let mut cols: Vec<usize> = (0..width).map(|k| (start + k) % p).collect();
            cols.sort_unstable();
            cols.into_iter()
                .map(|j| (j, rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    let features = CsrMatrix::from_rows(p, &rows)?;
    let labels = planted_labels(&mut rng, &features, &w, kind);
    Ok((Dataset::new(features, labels)?, w))
}

pub fn gen_banded_glm(
    n: usize,
    p: usize,
    width: usize,
    seed: u64,
    kind: LossKind,
) -> Result<Dataset> {
    gen_banded_glm_with_truth(n, p, width, seed, kind).map(|(d, _)| d)
}

/// Sparsity-inducing penalty family searched by [`gen_regularization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsePenalty {
    L1,
    GroupL2,
}

impl SparsePenalty {
    pub fn with_lambda(self, lambda: f64) -> Result<Penalty> {
        match self {
            SparsePenalty::L1 => Penalty::l1(lambda),
            SparsePenalty::GroupL2 => Penalty::group_l2(lambda),
        }
    }
}

/// Settings of the regularization search.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationSearch {
    pub loss: LossKind,
    pub penalty: SparsePenalty,
    /// Relative half-width of the accepted band around the target fraction.
    pub band: f64,
    pub max_steps: usize,
    /// Solver settings for the solve at each bisection step.
    pub solver: SolverConfig,
}

impl Default for RegularizationSearch {
    fn default() -> Self {
        Self {
            loss: LossKind::Logistic,
            penalty: SparsePenalty::L1,
            band: 0.2,
            max_steps: 40,
            solver: SolverConfig {
                epochs: 300,
                tolerance: Some(1e-13),
                ..SolverConfig::default()
            },
        }
    }
}

/// Fraction of exactly nonzero entries.
pub fn nonzero_fraction(x: &[f64]) -> f64 {
    x.iter().filter(|v| **v != 0.0).count() as f64 / x.len() as f64
}

/// `(lambda1, lambda2)` with `lambda1 = 1/n` and `lambda2` chosen by
/// log-scale bisection so that the solution has a nonzero fraction within
/// `band` (relative) of `target`. A target of 1 gives `lambda2 = 0`.
pub fn gen_regularization(
    data: &Dataset,
    partition: &BlockPartition,
    target: f64,
    search: &RegularizationSearch,
) -> Result<(f64, f64)> {
    if data.n_samples() == 0 {
        return Err(Error::EmptyInput);
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target nonzero fraction must be in (0, 1], got {target}"
        )));
    }
    let lambda1 = 1.0 / data.n_samples() as f64;
    if target == 1.0 {
        return Ok((lambda1, 0.0));
    }
    let loss = Loss::new(search.loss, lambda1)?;
    let lambda_max = critical_lambda(data, &loss, partition, search.penalty);
    if !(lambda_max > 0.0) {
        return Err(Error::Bisection(
            "the gradient at zero vanishes; every lambda2 gives x = 0".into(),
        ));
    }
    let fraction_at = |lambda2: f64| -> Result<f64> {
        let problem = Problem::new(data, loss, search.penalty.with_lambda(lambda2)?, partition)?;
        let trace = run_sequential(&problem, &search.solver)?;
        Ok(nonzero_fraction(&trace.final_x))
    };
    let (lo_target, hi_target) = (target * (1.0 - search.band), target * (1.0 + search.band));
    let accept = |f: f64| f >= lo_target && f <= hi_target;

    // Larger lambda2 gives sparser solutions.
    let (mut lo, mut hi) = ((lambda_max * 1e-4).ln(), lambda_max.ln());
    let f_lo = fraction_at(lo.exp())?;
    if accept(f_lo) {
        return Ok((lambda1, lo.exp()));
    }
    if f_lo < lo_target {
        return Err(Error::Bisection(format!(
            "even lambda2 = {:e} gives nonzero fraction {f_lo} below the target band",
            lo.exp()
        )));
    }
    for step in 0..search.max_steps {
        let mid = 0.5 * (lo + hi);
        let f = fraction_at(mid.exp())?;
        log::debug!(
            "bisection step {step}: lambda2 = {:e}, nonzero fraction {f}",
            mid.exp()
        );
        if accept(f) {
            return Ok((lambda1, mid.exp()));
        }
        if f > hi_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bisection(format!(
        "no lambda2 reached the band [{lo_target}, {hi_target}] after {} steps",
        search.max_steps
    )))
}

/// Smallest `lambda2` for which `x = 0` solves the problem.
pub fn critical_lambda(
    data: &Dataset,
    loss: &Loss,
    partition: &BlockPartition,
    family: SparsePenalty,
) -> f64 {
    let g = smooth_gradient(data, loss, &vec![0.0; data.n_features()]);
    match family {
        SparsePenalty::L1 => g.iter().fold(0.0, |m, v| m.max(v.abs())),
        SparsePenalty::GroupL2 => partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&j| g[j] * g[j]).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
    }
}

/// A generated problem: data, partition and regularization.
#[derive(Debug, Clone)]
pub struct Instance {
    pub data: Dataset,
    pub partition: BlockPartition,
    pub loss: Loss,
    pub penalty: Penalty,
}

impl Instance {
    pub fn problem(&self) -> Result<Problem<'_>> {
        Problem::new(&self.data, self.loss, self.penalty, &self.partition)
    }
}

fn l1_logistic_instance(data: Dataset) -> Result<Instance> {
    let partition = BlockPartition::singleton(data.n_features())?;
    let (lambda1, lambda2) =
        gen_regularization(&data, &partition, 0.1, &RegularizationSearch::default())?;
    Ok(Instance {
        data,
        partition,
        loss: Loss::logistic(lambda1)?,
        penalty: Penalty::l1(lambda2)?,
    })
}

/// Sparse logistic regression with l1 + l2 penalty: `n = 200`, `p = 50`,
/// five nonzeros per row, seed 42, `lambda1 = 1/n` and `lambda2` tuned for
/// 10% nonzero coefficients.
pub fn standard_instance() -> Result<Instance> {
    l1_logistic_instance(gen_sparse_glm(200, 50, 0.1, 42, LossKind::Logistic)?)
}

/// Banded logistic problem with `n = p = 2000`, ten columns per row and
/// `delta = 0.005`, regularized like [`standard_instance`].
pub fn banded_instance() -> Result<Instance> {
    l1_logistic_instance(gen_banded_glm(2000, 2000, 10, 7, LossKind::Logistic)?)
}
