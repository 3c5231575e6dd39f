use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::sample_gradient;
use crate::problem::Problem;

/// Guaranteed per-iteration contraction of `E ||x_t - x*||^2` for step
/// `a / (5L)`: `(1/5) min(1/n, a / kappa)`. Zero without strong convexity.
pub fn sequential_rate(problem: &Problem<'_>, a: f64) -> f64 {
    let kappa = problem.kappa();
    if !kappa.is_finite() {
        return 0.0;
    }
    0.2 * (1.0 / problem.n_samples() as f64).min(a / kappa)
}

/// `||x0 - x*||^2 + (1 / (5 L^2)) sum_i ||alpha_i^0 - grad f_i(x*)||^2`
/// for a zero initial memory, with `f_i` the regularized sample loss.
pub fn initial_constant(problem: &Problem<'_>, x0: &[f64], x_star: &[f64]) -> f64 {
    let dist: f64 = x0.iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum();
    let memory_term: f64 = (0..problem.n_samples())
        .map(|i| {
            sample_gradient(problem.data(), problem.loss(), i, x_star)
                .iter()
                .map(|g| g * g)
                .sum::<f64>()
        })
        .sum();
    let l = problem.lipschitz();
    dist + memory_term / (5.0 * l * l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeEntry {
    pub iterations: u64,
    pub median: f64,
    pub bound: f64,
    /// `bound - median`; negative on failure.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub rho: f64,
    pub c0: f64,
    pub slack: f64,
    pub passed: bool,
    pub entries: Vec<EnvelopeEntry>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Checks `median_runs ||x_t - x*||^2 <= (1 - rho)^t * c0 * slack` at every
/// checkpoint. Each run is a list of `(t, ||x_t - x*||^2)` pairs; all runs
/// must share the same checkpoint positions.
pub fn rate_envelope_check(
    runs: &[Vec<(u64, f64)>],
    rho: f64,
    c0: f64,
    slack: f64,
) -> Result<EnvelopeReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to check".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::InvalidArgument(
            "runs have different checkpoint counts".into(),
        ));
    }
    let mut entries = Vec::with_capacity(first.len());
    for (k, &(t, _)) in first.iter().enumerate() {
        if runs.iter().any(|r| r[k].0 != t) {
            return Err(Error::InvalidArgument(format!(
                "checkpoint {k} differs between runs"
            )));
        }
        let mut values: Vec<f64> = runs.iter().map(|r| r[k].1).collect();
        let med = median(&mut values);
        let bound = (1.0 - rho).powf(t as f64) * c0 * slack;
        entries.push(EnvelopeEntry {
            iterations: t,
            median: med,
            bound,
            margin: bound - med,
            pass: med <= bound,
        });
    }
    Ok(EnvelopeReport {
        rho,
        c0,
        slack,
        passed: entries.iter().all(|e| e.pass),
        entries,
    })
}
