use crate::data::Dataset;

/// SAGA gradient table for linear models.
///
/// The historical gradient of sample `i` is `scalars[i] * a_i`, so the table
/// needs one float per sample. `avg` is the running mean of those gradients,
/// maintained incrementally by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMemory {
    scalars: Vec<f64>,
    avg: Vec<f64>,
}

impl GradientMemory {
    /// All-zero memory.
    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            scalars: vec![0.0; n],
            avg: vec![0.0; p],
        }
    }

    pub fn from_parts(scalars: Vec<f64>, avg: Vec<f64>) -> Self {
        Self { scalars, avg }
    }

    /// Memory with the given scalars and an exactly computed average.
    pub fn from_scalars(data: &Dataset, scalars: Vec<f64>) -> Self {
        let avg = exact_average(data, &scalars);
        Self { scalars, avg }
    }

    pub fn n_samples(&self) -> usize {
        self.scalars.len()
    }

    pub fn scalars(&self) -> &[f64] {
        &self.scalars
    }

    pub fn avg(&self) -> &[f64] {
        &self.avg
    }

    /// `(scalars, avg)` borrowed mutably at once.
    pub(crate) fn split_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.scalars, &mut self.avg)
    }

    /// Replaces the scalar of sample `i` and folds the change into the average.
    pub fn update(&mut self, data: &Dataset, i: usize, new_scalar: f64) {
        let step = (new_scalar - self.scalars[i]) / self.scalars.len() as f64;
        for (j, a) in data.features().row(i).iter() {
            self.avg[j] += step * a;
        }
        self.scalars[i] = new_scalar;
    }

    /// Largest absolute gap between the running average and the exact one.
    pub fn drift(&self, data: &Dataset) -> f64 {
        exact_average(data, &self.scalars)
            .iter()
            .zip(&self.avg)
            .map(|(e, a)| (e - a).abs())
            .fold(0.0, f64::max)
    }

    /// Recomputes the average from the scalars.
    pub fn resync(&mut self, data: &Dataset) {
        self.avg = exact_average(data, &self.scalars);
    }

    /// Dense historical gradient of sample `i`.
    pub fn implied_gradient(&self, data: &Dataset, i: usize) -> Vec<f64> {
        let mut g = vec![0.0; data.n_features()];
        for (j, a) in data.features().row(i).iter() {
            g[j] = self.scalars[i] * a;
        }
        g
    }
}

/// `(1/n) sum_i scalars[i] * a_i`.
pub fn exact_average(data: &Dataset, scalars: &[f64]) -> Vec<f64> {
    let mut sum = vec![0.0; data.n_features()];
    for (row, &s) in data.features().rows().zip(scalars) {
        for (j, a) in row.iter() {
            sum[j] += s * a;
        }
    }
    let n = scalars.len() as f64;
    sum.iter_mut().for_each(|v| *v /= n);
    sum
}

/// Resynchronizes a memory table; returns the updated table.
pub fn resync_average(mut memory: GradientMemory, data: &Dataset) -> GradientMemory {
    memory.resync(data);
    memory
}
