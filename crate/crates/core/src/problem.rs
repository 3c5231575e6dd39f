use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::StepSize;
use crate::data::{BlockPartition, Dataset, DeadBlockPolicy, SupportIndex};
use crate::error::{Error, Result};
use crate::loss::{full_objective, lipschitz_constant, Loss, SmoothnessInfo};
use crate::penalty::Penalty;

/// A composite problem `min_x (1/n) sum_i f_i(x) + h(x)` with everything the
/// solvers need precomputed: the extended-support index and the smoothness
/// constants.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    data: &'a Dataset,
    loss: Loss,
    penalty: Penalty,
    partition: &'a BlockPartition,
    index: SupportIndex,
    smoothness: SmoothnessInfo,
}

/// Scalar summary of a problem, written next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub n_samples: usize,
    pub n_features: usize,
    pub nnz: usize,
    pub n_blocks: usize,
    pub lipschitz: f64,
    pub mu: f64,
    pub kappa: f64,
    pub delta: f64,
    pub loss: Loss,
    pub penalty: Penalty,
    pub problem_hash: String,
}

impl<'a> Problem<'a> {
    pub fn new(
        data: &'a Dataset,
        loss: Loss,
        penalty: Penalty,
        partition: &'a BlockPartition,
    ) -> Result<Self> {
        Self::with_policy(data, loss, penalty, partition, DeadBlockPolicy::Reject)
    }

    pub fn with_policy(
        data: &'a Dataset,
        loss: Loss,
        penalty: Penalty,
        partition: &'a BlockPartition,
        policy: DeadBlockPolicy,
    ) -> Result<Self> {
        loss.check_labels(data)?;
        let index = SupportIndex::build_with(data.features(), partition, policy)?;
        let smoothness = lipschitz_constant(data, &loss)?;
        Ok(Self {
            data,
            loss,
            penalty,
            partition,
            index,
            smoothness,
        })
    }

    /// Same data and partition, different regularization.
    pub fn with_regularization(&self, loss: Loss, penalty: Penalty) -> Result<Self> {
        let smoothness = lipschitz_constant(self.data, &loss)?;
        Ok(Self {
            data: self.data,
            loss,
            penalty,
            partition: self.partition,
            index: self.index.clone(),
            smoothness,
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn partition(&self) -> &'a BlockPartition {
        self.partition
    }

    pub fn index(&self) -> &SupportIndex {
        &self.index
    }

    pub fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn lipschitz(&self) -> f64 {
        self.smoothness.lipschitz
    }

    /// Certified strong-convexity modulus: the l2 weight.
    pub fn mu(&self) -> f64 {
        self.loss.lambda1
    }

    /// `L / mu`; infinite without l2 regularization.
    pub fn kappa(&self) -> f64 {
        if self.mu() > 0.0 {
            self.lipschitz() / self.mu()
        } else {
            f64::INFINITY
        }
    }

    pub fn step_size(&self, step: StepSize) -> Result<f64> {
        let gamma = match step {
            StepSize::Fixed(g) => g,
            StepSize::Auto(rule) => rule.factor() / self.lipschitz(),
        };
        if gamma > 0.0 && gamma.is_finite() {
            Ok(gamma)
        } else {
            Err(Error::InvalidArgument(format!(
                "step size must be positive, got {gamma}"
            )))
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        full_objective(self.data, &self.loss, &self.penalty, self.partition, x)
    }

    /// SHA-256 over the dataset bytes, loss, penalty and partition.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let m = self.data.features();
        h.update(b"proxsaga-problem-v1");
        for v in [m.n_rows(), m.n_cols(), m.nnz()] {
            h.update((v as u64).to_le_bytes());
        }
        for &o in m.row_offsets() {
            h.update((o as u64).to_le_bytes());
        }
        for &j in m.col_indices() {
            h.update((j as u64).to_le_bytes());
        }
        for v in m.values().iter().chain(self.data.labels()) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(match self.loss.kind {
            crate::loss::LossKind::Logistic => b"logistic",
            crate::loss::LossKind::Squared => b"squared\0",
        });
        h.update(self.loss.lambda1.to_bits().to_le_bytes());
        match self.penalty {
            Penalty::Zero => h.update(b"zero"),
            Penalty::L1 { lambda } => {
                h.update(b"l1");
                h.update(lambda.to_bits().to_le_bytes());
            }
            Penalty::GroupL2 { lambda } => {
                h.update(b"group_l2");
                h.update(lambda.to_bits().to_le_bytes());
            }
            Penalty::Box { lo, hi } => {
                h.update(b"box");
                h.update(lo.to_bits().to_le_bytes());
                h.update(hi.to_bits().to_le_bytes());
            }
        }
        for &b in self.partition.block_ids() {
            h.update((b as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            n_samples: self.n_samples(),
            n_features: self.n_features(),
            nnz: self.data.features().nnz(),
            n_blocks: self.partition.n_blocks(),
            lipschitz: self.lipschitz(),
            mu: self.mu(),
            kappa: self.kappa(),
            delta: self.index.delta(),
            loss: self.loss,
            penalty: self.penalty,
            problem_hash: self.hash(),
        }
    }
}
