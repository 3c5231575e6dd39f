//! Dense reference implementations written independently of the library.
//! Only the inputs (matrix entries, labels, weights, blocks) are taken from
//! library types; every formula is recomputed here.

#![allow(dead_code)]

use proxsaga::{BlockPartition, Dataset, Loss, LossKind, Penalty};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pen {
    Zero,
    L1(f64),
    Group(f64),
    Box(f64, f64),
}

impl From<Penalty> for Pen {
    fn from(p: Penalty) -> Self {
        match p {
            Penalty::Zero => Pen::Zero,
            Penalty::L1 { lambda } => Pen::L1(lambda),
            Penalty::GroupL2 { lambda } => Pen::Group(lambda),
            Penalty::Box { lo, hi } => Pen::Box(lo, hi),
        }
    }
}

/// Value of one block of the penalty.
pub fn pen_block_value(pen: Pen, xb: &[f64]) -> f64 {
    match pen {
        Pen::Zero => 0.0,
        Pen::L1(l) => l * xb.iter().map(|v| v.abs()).sum::<f64>(),
        Pen::Group(l) => l * xb.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Pen::Box(lo, hi) => {
            if xb.iter().all(|&v| v >= lo && v <= hi) {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

/// `argmin_z pen(z) + ||z - v||^2 / (2t)` for one block.
pub fn pen_block_prox(pen: Pen, v: &[f64], t: f64) -> Vec<f64> {
    match pen {
        Pen::Zero => v.to_vec(),
        Pen::L1(l) => v
            .iter()
            .map(|&a| {
                if a > t * l {
                    a - t * l
                } else if a < -t * l {
                    a + t * l
                } else {
                    0.0
                }
            })
            .collect(),
        Pen::Group(l) => {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm <= t * l {
                vec![0.0; v.len()]
            } else {
                let s = 1.0 - t * l / norm;
                v.iter().map(|a| a * s).collect()
            }
        }
        Pen::Box(lo, hi) => v.iter().map(|a| a.max(lo).min(hi)).collect(),
    }
}

/// Dense copy of a problem.
#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub logistic: bool,
    pub lambda1: f64,
    pub pen: Pen,
    pub blocks: Vec<Vec<usize>>,
}

impl Dense {
    pub fn new(data: &Dataset, loss: Loss, penalty: Penalty, partition: &BlockPartition) -> Self {
        let p = data.n_features();
        let rows = data
            .features()
            .rows()
            .map(|r| {
                let mut d = vec![0.0; p];
                for (j, v) in r.iter() {
                    d[j] = v;
                }
                d
            })
            .collect();
        Self {
            rows,
            labels: data.labels().to_vec(),
            logistic: loss.kind == LossKind::Logistic,
            lambda1: loss.lambda1,
            pen: penalty.into(),
            blocks: partition.blocks().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn scalar_loss(&self, z: f64, b: f64) -> f64 {
        if self.logistic {
            // log(1 + exp(-bz)), written as a softplus.
            let t = -b * z;
            t.max(0.0) + (-t.abs()).exp().ln_1p()
        } else {
            0.5 * (z - b).powi(2)
        }
    }

    fn scalar_derivative(&self, z: f64, b: f64) -> f64 {
        if self.logistic {
            -b / (1.0 + (b * z).exp())
        } else {
            z - b
        }
    }

    /// `l'(a_i^T x, b_i)`, the memory scalar of sample `i`.
    pub fn scalar(&self, i: usize, x: &[f64]) -> f64 {
        self.scalar_derivative(self.margin(i, x), self.labels[i])
    }

    /// Data part of the sample gradient, without the l2 term.
    pub fn data_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let s = self.scalar(i, x);
        self.rows[i].iter().map(|a| s * a).collect()
    }

    pub fn smooth(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        let data: f64 = (0..self.n())
            .map(|i| self.scalar_loss(self.margin(i, x), self.labels[i]))
            .sum();
        data / n + 0.5 * self.lambda1 * x.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn penalty(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| pen_block_value(self.pen, &b.iter().map(|&j| x[j]).collect::<Vec<_>>()))
            .sum()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth(x) + self.penalty(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        let mut g: Vec<f64> = x.iter().map(|v| self.lambda1 * v).collect();
        for i in 0..self.n() {
            let s = self.scalar(i, x) / n;
            for (gj, a) in g.iter_mut().zip(&self.rows[i]) {
                *gj += s * a;
            }
        }
        g
    }

    /// Prox of the full penalty with step `t`.
    pub fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        self.weighted_prox(v, t, &vec![1.0; self.blocks.len()])
    }

    /// Prox of `sum_B w_B h_B` with step `t`.
    pub fn weighted_prox(&self, v: &[f64], t: f64, w: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for (b, block) in self.blocks.iter().enumerate() {
            let vb: Vec<f64> = block.iter().map(|&j| v[j]).collect();
            let zb = pen_block_prox(self.pen, &vb, t * w[b]);
            for (&j, z) in block.iter().zip(zb) {
                out[j] = z;
            }
        }
        out
    }

    /// Blocks intersecting the nonzeros of row `i`, by scanning every entry.
    pub fn extended_support(&self, i: usize) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&b| self.blocks[b].iter().any(|&j| self.rows[i][j] != 0.0))
            .collect()
    }

    /// `n_B` for every block.
    pub fn block_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.blocks.len()];
        for i in 0..self.n() {
            for b in self.extended_support(i) {
                c[b] += 1;
            }
        }
        c
    }

    /// `d_B = n / n_B`.
    pub fn block_weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.block_counts().iter().map(|&c| n / c as f64).collect()
    }

    pub fn delta(&self) -> f64 {
        *self.block_counts().iter().max().unwrap() as f64 / self.n() as f64
    }

    fn coordinate_weights(&self) -> Vec<f64> {
        let w = self.block_weights();
        let mut d = vec![0.0; self.p()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &j in block {
                d[j] = w[b];
            }
        }
        d
    }

    /// `||x - prox_{gamma phi}(x - gamma D grad f(x))||`, with `phi` the
    /// `d_B`-weighted penalty.
    pub fn fixed_point_residual(&self, x: &[f64], gamma: f64) -> f64 {
        let g = self.gradient(x);
        let d = self.coordinate_weights();
        let v: Vec<f64> = (0..x.len()).map(|j| x[j] - gamma * d[j] * g[j]).collect();
        let z = self.weighted_prox(&v, gamma, &self.block_weights());
        x.iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `max_i c ||a_i||^2 + lambda1`.
    pub fn lipschitz(&self) -> f64 {
        let c = if self.logistic { 0.25 } else { 1.0 };
        self.rows
            .iter()
            .map(|r| c * r.iter().map(|a| a * a).sum::<f64>())
            .fold(0.0, f64::max)
            + self.lambda1
    }
}

/// Proximal SAGA with a full vector memory per sample. The l2 term is
/// evaluated at the current point instead of being stored.
pub struct DenseSagaOracle<'a> {
    pub problem: &'a Dense,
    pub x: Vec<f64>,
    pub memory: Vec<Vec<f64>>,
    pub avg: Vec<f64>,
}

impl<'a> DenseSagaOracle<'a> {
    pub fn new(problem: &'a Dense) -> Self {
        let p = problem.p();
        Self {
            problem,
            x: vec![0.0; p],
            memory: vec![vec![0.0; p]; problem.n()],
            avg: vec![0.0; p],
        }
    }

    pub fn step(&mut self, i: usize, gamma: f64) {
        let pr = self.problem;
        let n = pr.n() as f64;
        let g = pr.data_gradient(i, &self.x);
        let v: Vec<f64> = (0..self.x.len())
            .map(|j| {
                self.x[j]
                    - gamma * (g[j] - self.memory[i][j] + self.avg[j] + pr.lambda1 * self.x[j])
            })
            .collect();
        for ((a, gj), mj) in self.avg.iter_mut().zip(&g).zip(&self.memory[i]) {
            *a += (gj - mj) / n;
        }
        self.memory[i] = g;
        self.x = pr.prox(&v, gamma);
    }
}

/// Sparse SAGA without any proximal step: only coordinates in the blocks of
/// `T_i` move, with the average term reweighted by `d_B`.
pub struct NoProxSparseOracle<'a> {
    pub problem: &'a Dense,
    pub x: Vec<f64>,
    pub scalars: Vec<f64>,
    pub avg: Vec<f64>,
    weights: Vec<f64>,
    supports: Vec<Vec<usize>>,
}

impl<'a> NoProxSparseOracle<'a> {
    pub fn new(problem: &'a Dense) -> Self {
        let p = problem.p();
        Self {
            problem,
            x: vec![0.0; p],
            scalars: vec![0.0; problem.n()],
            avg: vec![0.0; p],
            weights: problem.block_weights(),
            supports: (0..problem.n())
                .map(|i| problem.extended_support(i))
                .collect(),
        }
    }

    pub fn step(&mut self, i: usize, gamma: f64) {
        let pr = self.problem;
        let n = pr.n() as f64;
        let new = pr.scalar(i, &self.x);
        let old = self.scalars[i];
        let row = &pr.rows[i];
        for &b in &self.supports[i] {
            for &j in &pr.blocks[b] {
                let v =
                    (new - old) * row[j] + self.weights[b] * (self.avg[j] + pr.lambda1 * self.x[j]);
                self.x[j] -= gamma * v;
            }
        }
        for (j, a) in row.iter().enumerate() {
            self.avg[j] += (new - old) * a / n;
        }
        self.scalars[i] = new;
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index sequence drawn independently of the library's sampler.
pub fn index_sequence(n: usize, len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f0a_ac1e);
    (0..len).map(|_| rng.gen_range(0..n)).collect()
}

/// A random partition of `0..p` into blocks of random sizes.
pub fn random_blocks(rng: &mut impl Rng, p: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..p).collect();
    for k in (1..p).rev() {
        perm.swap(k, rng.gen_range(0..=k));
    }
    let mut blocks = Vec::new();
    let mut rest = &perm[..];
    while !rest.is_empty() {
        let size = rng.gen_range(1..=rest.len().min(4));
        blocks.push(rest[..size].to_vec());
        rest = &rest[size..];
    }
    blocks
}

/// Random sparse rows where every row is nonempty and every column is used
/// by at least one row.
pub fn random_rows(rng: &mut impl Rng, n: usize, p: usize, density: f64) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for row in rows.iter_mut() {
        for j in 0..p {
            if rng.gen_bool(density) {
                row.push((j, rng.gen_range(-2.0..2.0)));
            }
        }
        if row.is_empty() {
            row.push((rng.gen_range(0..p), rng.gen_range(0.5..2.0)));
        }
    }
    for j in 0..p {
        if !rows.iter().any(|r| r.iter().any(|&(c, _)| c == j)) {
            let i = rng.gen_range(0..n);
            rows[i].push((j, rng.gen_range(0.5..2.0)));
            rows[i].sort_by_key(|&(c, _)| c);
        }
    }
    rows
}

pub fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}
