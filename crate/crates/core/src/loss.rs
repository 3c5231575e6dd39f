//! Losses of linear models, `f_i(x) = l(a_i^T x, b_i) + (lambda1 / 2) ||x||^2`.

use serde::{Deserialize, Serialize};

use crate::data::{BlockPartition, Dataset};
use crate::error::{Error, Result};
use crate::penalty::Penalty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
    /// Weight of the smooth l2 term, applied as exact regularization.
    pub lambda1: f64,
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LossKind {
    /// `l(z, b)`, overflow-safe for the logistic loss.
    #[inline]
    pub fn value(self, z: f64, b: f64) -> f64 {
        match self {
            LossKind::Logistic => {
                let t = -b * z;
                if t > 0.0 {
                    t + (-t).exp().ln_1p()
                } else {
                    t.exp().ln_1p()
                }
            }
            LossKind::Squared => 0.5 * (z - b) * (z - b),
        }
    }

    /// `dl/dz (z, b)`.
    #[inline]
    pub fn derivative(self, z: f64, b: f64) -> f64 {
        match self {
            LossKind::Logistic => -b * sigmoid(-b * z),
            LossKind::Squared => z - b,
        }
    }

    /// Upper bound on `d^2 l / dz^2`.
    pub fn curvature_bound(self) -> f64 {
        match self {
            LossKind::Logistic => 0.25,
            LossKind::Squared => 1.0,
        }
    }
}

/// Value and derivative of the scalar loss at margin `z`.
pub fn loss_scalar(kind: LossKind, z: f64, b: f64) -> (f64, f64) {
    (kind.value(z, b), kind.derivative(z, b))
}

impl Loss {
    pub fn new(kind: LossKind, lambda1: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda1 must be finite and nonnegative, got {lambda1}"
            )));
        }
        Ok(Self { kind, lambda1 })
    }

    pub fn logistic(lambda1: f64) -> Result<Self> {
        Self::new(LossKind::Logistic, lambda1)
    }

    pub fn squared(lambda1: f64) -> Result<Self> {
        Self::new(LossKind::Squared, lambda1)
    }

    /// Checks that the dataset's labels suit this loss.
    pub fn check_labels(&self, data: &Dataset) -> Result<()> {
        match self.kind {
            LossKind::Logistic => data.check_binary_labels(),
            LossKind::Squared => Ok(()),
        }
    }
}

/// Smoothness constants of the per-sample functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessInfo {
    /// `max_i L_i`.
    pub lipschitz: f64,
    pub per_sample: Vec<f64>,
}

/// `L_i = c ||a_i||^2 + lambda1` with `c` the curvature bound of the loss.
pub fn lipschitz_constant(data: &Dataset, loss: &Loss) -> Result<SmoothnessInfo> {
    if data.n_samples() == 0 {
        return Err(Error::EmptyInput);
    }
    let c = loss.kind.curvature_bound();
    let per_sample: Vec<f64> = data
        .features()
        .rows()
        .map(|row| c * row.norm_sq() + loss.lambda1)
        .collect();
    let lipschitz = per_sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SmoothnessInfo {
        lipschitz,
        per_sample,
    })
}

/// `(1/n) sum_i l(a_i^T x, b_i) + (lambda1/2) ||x||^2`.
pub fn smooth_objective(data: &Dataset, loss: &Loss, x: &[f64]) -> f64 {
    let n = data.n_samples() as f64;
    let data_term: f64 = data
        .features()
        .rows()
        .zip(data.labels())
        .map(|(row, &b)| loss.kind.value(row.dot(x), b))
        .sum();
    data_term / n + 0.5 * loss.lambda1 * x.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`smooth_objective`].
pub fn smooth_gradient(data: &Dataset, loss: &Loss, x: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; data.n_features()];
    accumulate_data_gradient(data, loss, x, 0..data.n_samples(), &mut grad);
    let inv_n = 1.0 / data.n_samples() as f64;
    for (g, &xj) in grad.iter_mut().zip(x) {
        *g = *g * inv_n + loss.lambda1 * xj;
    }
    grad
}

/// Adds `sum_{i in rows} l'(a_i^T x) a_i` into `grad`, returning
/// `sum_{i in rows} l(a_i^T x)`.
pub(crate) fn accumulate_data_gradient(
    data: &Dataset,
    loss: &Loss,
    x: &[f64],
    rows: std::ops::Range<usize>,
    grad: &mut [f64],
) -> f64 {
    let mut value = 0.0;
    for i in rows {
        let row = data.features().row(i);
        let b = data.labels()[i];
        let z = row.dot(x);
        value += loss.kind.value(z, b);
        let d = loss.kind.derivative(z, b);
        for (j, a) in row.iter() {
            grad[j] += d * a;
        }
    }
    value
}

/// `f(x) + h(x)`.
pub fn full_objective(
    data: &Dataset,
    loss: &Loss,
    penalty: &Penalty,
    partition: &BlockPartition,
    x: &[f64],
) -> f64 {
    smooth_objective(data, loss, x) + penalty.value(x, partition)
}

/// Dense gradient of one `f_i`, including the l2 term.
pub fn sample_gradient(data: &Dataset, loss: &Loss, i: usize, x: &[f64]) -> Vec<f64> {
    let row = data.features().row(i);
    let d = loss.kind.derivative(row.dot(x), data.labels()[i]);
    let mut grad: Vec<f64> = x.iter().map(|&xj| loss.lambda1 * xj).collect();
    for (j, a) in row.iter() {
        grad[j] += d * a;
    }
    grad
}
