//! Block-separable penalties and their proximal operators.
//!
//! A penalty `h(x) = sum_B h_B(x_B)` is evaluated and proxed block by block.
//! The sparse surrogate `phi_i(x) = sum_{B in T_i} d_B h_B(x)` only needs the
//! block prox with the step scaled by `d_B`, which is what [`ProxStep::scale`]
//! carries.

use serde::{Deserialize, Serialize};

use crate::data::{BlockPartition, SupportIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    Zero,
    /// `lambda * ||x||_1`
    L1 {
        lambda: f64,
    },
    /// `lambda * sum_B ||x_B||_2` (group lasso)
    GroupL2 {
        lambda: f64,
    },
    /// Indicator of the box `[lo, hi]^p`.
    Box {
        lo: f64,
        hi: f64,
    },
}

/// Step passed to a block prox: the effective step is `gamma * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxStep {
    gamma: f64,
    scale: f64,
}

impl ProxStep {
    pub fn new(gamma: f64, scale: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prox step must be positive, got {gamma}"
            )));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prox scale must be >= 1, got {scale}"
            )));
        }
        Ok(Self { gamma, scale })
    }

    /// Plain step on `h`.
    pub fn plain(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn effective(&self) -> f64 {
        self.gamma * self.scale
    }
}

#[inline]
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

impl Penalty {
    pub fn l1(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Penalty::L1 { lambda })
    }

    pub fn group_l2(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Penalty::GroupL2 { lambda })
    }

    pub fn box_constraint(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "box requires lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Penalty::Box { lo, hi })
    }

    /// Whether the prox is the identity for every step.
    pub fn is_identity(&self) -> bool {
        match *self {
            Penalty::Zero => true,
            Penalty::L1 { lambda } | Penalty::GroupL2 { lambda } => lambda == 0.0,
            Penalty::Box { lo, hi } => lo == f64::NEG_INFINITY && hi == f64::INFINITY,
        }
    }

    /// `h_B(x_B)` for one block.
    pub fn block_value(&self, xb: &[f64]) -> f64 {
        match *self {
            Penalty::Zero => 0.0,
            Penalty::L1 { lambda } => lambda * xb.iter().map(|v| v.abs()).sum::<f64>(),
            Penalty::GroupL2 { lambda } => lambda * xb.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Penalty::Box { lo, hi } => {
                if xb.iter().all(|&v| lo <= v && v <= hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `h(x)`. Returns `+inf` outside the domain of an extended-valued penalty.
    pub fn value(&self, x: &[f64], partition: &BlockPartition) -> f64 {
        match self {
            Penalty::GroupL2 { .. } => {
                let mut buf = Vec::new();
                partition
                    .blocks()
                    .iter()
                    .map(|block| {
                        buf.clear();
                        buf.extend(block.iter().map(|&j| x[j]));
                        self.block_value(&buf)
                    })
                    .sum()
            }
            _ => self.block_value(x),
        }
    }

    /// Block prox with a validated step. Rejects non-finite input.
    pub fn prox_block(&self, v: &[f64], step: ProxStep) -> Result<Vec<f64>> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prox input"));
        }
        let mut out = v.to_vec();
        self.prox_block_in_place(&mut out, step.effective());
        Ok(out)
    }

    /// Block prox with effective step `step`, in place. No validation; the
    /// solvers call this on every iteration.
    #[inline]
    pub fn prox_block_in_place(&self, v: &mut [f64], step: f64) {
        match *self {
            Penalty::Zero => {}
            Penalty::L1 { lambda } => {
                let t = step * lambda;
                for x in v.iter_mut() {
                    *x = soft_threshold(*x, t);
                }
            }
            Penalty::GroupL2 { lambda } => {
                let t = step * lambda;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= t {
                    v.iter_mut().for_each(|x| *x = 0.0);
                } else {
                    let shrink = 1.0 - t / norm;
                    v.iter_mut().for_each(|x| *x *= shrink);
                }
            }
            Penalty::Box { lo, hi } => {
                for x in v.iter_mut() {
                    *x = x.clamp(lo, hi);
                }
            }
        }
    }

    /// Full prox of `gamma * h` over every block of the partition.
    pub fn prox(&self, v: &[f64], gamma: f64, partition: &BlockPartition) -> Vec<f64> {
        let mut out = v.to_vec();
        self.prox_weighted_in_place(&mut out, gamma, partition, None);
        out
    }

    /// Prox of `gamma * sum_B w_B h_B` where `w_B` comes from `weights`
    /// (all ones when `None`). Blocks with weight 0 are left untouched.
    pub(crate) fn prox_weighted_in_place(
        &self,
        x: &mut [f64],
        gamma: f64,
        partition: &BlockPartition,
        weights: Option<&[f64]>,
    ) {
        if matches!(self, Penalty::Zero) {
            return;
        }
        if !matches!(self, Penalty::GroupL2 { .. }) {
            // Separable: coordinate-wise.
            for (j, xj) in x.iter_mut().enumerate() {
                let w = weights.map_or(1.0, |w| w[partition.block_of(j)]);
                if w > 0.0 {
                    self.prox_block_in_place(std::slice::from_mut(xj), gamma * w);
                }
            }
            return;
        }
        let mut buf = Vec::new();
        for (b, block) in partition.blocks().iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[b]);
            if w == 0.0 {
                continue;
            }
            buf.clear();
            buf.extend(block.iter().map(|&j| x[j]));
            self.prox_block_in_place(&mut buf, gamma * w);
            for (&j, &v) in block.iter().zip(&buf) {
                x[j] = v;
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularization strength must be finite and nonnegative, got {lambda}"
        )))
    }
}

/// `phi_i(x) = sum_{B in T_i} d_B h_B(x_B)`.
pub fn phi_value(
    penalty: &Penalty,
    partition: &BlockPartition,
    index: &SupportIndex,
    i: usize,
    x: &[f64],
) -> f64 {
    let weights = index.block_weights();
    let mut buf = Vec::new();
    index
        .extended_support(i)
        .iter()
        .map(|&b| {
            buf.clear();
            buf.extend(partition.block(b).iter().map(|&j| x[j]));
            weights[b] * penalty.block_value(&buf)
        })
        .sum()
}

/// `prox_{gamma phi_i}(v)`: every block of `T_i` gets the block prox with step
/// `d_B * gamma`; every other coordinate is returned unchanged.
pub fn prox_phi(
    penalty: &Penalty,
    partition: &BlockPartition,
    index: &SupportIndex,
    i: usize,
    gamma: f64,
    v: &[f64],
) -> Result<Vec<f64>> {
    if v.len() != partition.dim() {
        return Err(Error::DimensionMismatch {
            expected: partition.dim(),
            got: v.len(),
        });
    }
    let mut out = v.to_vec();
    let weights = index.block_weights();
    for &b in index.extended_support(i) {
        let block = partition.block(b);
        let vb: Vec<f64> = block.iter().map(|&j| v[j]).collect();
        let zb = penalty.prox_block(&vb, ProxStep::new(gamma, weights[b])?)?;
        for (&j, z) in block.iter().zip(zb) {
            out[j] = z;
        }
    }
    Ok(out)
}
