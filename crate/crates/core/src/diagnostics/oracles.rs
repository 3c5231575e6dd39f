//! Straightforward dense reimplementations used to cross-check the sparse
//! code paths. They share nothing with the solvers beyond the scalar loss
//! functions and the block proximal operators.

use crate::data::{BlockPartition, Dataset};
use crate::loss::Loss;
use crate::penalty::Penalty;

/// Dense copy of a problem.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub loss: Loss,
    pub blocks: Vec<Vec<usize>>,
    pub p: usize,
}

impl DenseOracle {
    pub fn new(data: &Dataset, loss: Loss, partition: &BlockPartition) -> Self {
        Self {
            rows: data.features().to_dense(),
            labels: data.labels().to_vec(),
            loss,
            blocks: partition.blocks().to_vec(),
            p: data.n_features(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `l'(a_i^T x)` for sample `i`.
    pub fn scalar(&self, i: usize, x: &[f64]) -> f64 {
        self.loss.kind.derivative(self.margin(i, x), self.labels[i])
    }

    /// `(1/n) sum_i l_i + (lambda1/2)||x||^2 + h(x)`.
    pub fn objective(&self, penalty: &Penalty, x: &[f64]) -> f64 {
        let data: f64 = (0..self.n())
            .map(|i| self.loss.kind.value(self.margin(i, x), self.labels[i]))
            .sum();
        let reg: f64 = x.iter().map(|v| v * v).sum::<f64>() * 0.5 * self.loss.lambda1;
        let h: f64 = self
            .blocks
            .iter()
            .map(|b| penalty.block_value(&b.iter().map(|&j| x[j]).collect::<Vec<_>>()))
            .sum();
        data / self.n() as f64 + reg + h
    }

    /// Gradient of the smooth part.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x.iter().map(|v| self.loss.lambda1 * v).collect();
        let inv_n = 1.0 / self.n() as f64;
        for i in 0..self.n() {
            let s = self.scalar(i, x) * inv_n;
            for (gj, a) in g.iter_mut().zip(&self.rows[i]) {
                *gj += s * a;
            }
        }
        g
    }

    /// Blocks meeting the support of row `i`, by scanning every block.
    pub fn extended_support(&self, i: usize) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&b| self.blocks[b].iter().any(|&j| self.rows[i][j] != 0.0))
            .collect()
    }

    /// Number of rows whose extended support contains each block.
    pub fn block_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.blocks.len()];
        for i in 0..self.n() {
            for b in self.extended_support(i) {
                counts[b] += 1;
            }
        }
        counts
    }

    /// `n / n_B` per coordinate; zero for coordinates of dead blocks.
    pub fn coordinate_weights(&self) -> Vec<f64> {
        let counts = self.block_counts();
        let mut w = vec![0.0; self.p];
        for (b, block) in self.blocks.iter().enumerate() {
            for &j in block {
                if counts[b] > 0 {
                    w[j] = self.n() as f64 / counts[b] as f64;
                }
            }
        }
        w
    }

    /// One sparse SAGA step without a proximal operator, on dense state:
    /// `x_j -= gamma v_j` for `j` in `T_i` with
    /// `v = (s_new - s_old) a_i + d (avg + lambda1 x)`.
    pub fn no_prox_step(
        &self,
        weights: &[f64],
        x: &mut [f64],
        scalars: &mut [f64],
        avg: &mut [f64],
        i: usize,
        gamma: f64,
    ) {
        let s_new = self.scalar(i, x);
        let diff = s_new - scalars[i];
        let coords: Vec<usize> = self
            .extended_support(i)
            .into_iter()
            .flat_map(|b| self.blocks[b].clone())
            .collect();
        let v: Vec<f64> = coords
            .iter()
            .map(|&j| weights[j] * (avg[j] + self.loss.lambda1 * x[j]) + diff * self.rows[i][j])
            .collect();
        for (&j, vj) in coords.iter().zip(v) {
            x[j] -= gamma * vj;
        }
        let step = diff / self.n() as f64;
        for (aj, &a) in avg.iter_mut().zip(&self.rows[i]) {
            if a != 0.0 {
                *aj += step * a;
            }
        }
        scalars[i] = s_new;
    }
}
