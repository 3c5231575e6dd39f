use std::io::Write;

use serde::{Deserialize, Serialize};

use super::engine::{run_async, AsyncConfig, SnapshotMode};
use crate::error::{Error, Result};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub cores: usize,
    /// Time to target with one core over time to target with `cores`.
    pub wall_speedup: f64,
    /// `cores * iterations(1 core) / iterations(cores)`.
    pub theoretical_speedup: f64,
    pub reached: bool,
    /// Mean over repeats.
    pub iterations_to_target: Option<f64>,
    pub seconds_to_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupTable {
    pub delta: f64,
    pub lipschitz: f64,
    pub kappa: f64,
    pub target: f64,
    pub rows: Vec<SpeedupRow>,
}

impl SpeedupTable {
    /// CSV with header `cores,wall_speedup,theoretical_speedup,reached`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "cores,wall_speedup,theoretical_speedup,reached")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:?},{:?},{}",
                r.cores, r.wall_speedup, r.theoretical_speedup, r.reached
            )?;
        }
        Ok(())
    }
}

/// Runs the asynchronous solver `repeats` times per core count (seeds
/// `config.solver.seed + r`), each run stopping at the first checkpoint
/// whose suboptimality against `f_star` is at most `target_subopt`, and
/// compares mean iterations and mean time to those of the one-core runs.
/// A core count counts as reached only if every repeat reached the target.
///
/// Checkpoints are taken inline by the workers (see [`SnapshotMode::Inline`]),
/// so iteration counts do not depend on how often a monitor thread gets
/// scheduled. Use a small `checkpoint_every` for a fine resolution.
pub fn measure_speedup(
    problem: &Problem<'_>,
    config: &AsyncConfig,
    cores: &[usize],
    target_subopt: f64,
    f_star: f64,
    repeats: usize,
) -> Result<SpeedupTable> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if cores.first() != Some(&1) {
        return Err(Error::InvalidArgument(
            "core counts must start with 1".into(),
        ));
    }
    if cores.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "core counts must be strictly increasing".into(),
        ));
    }
    if !(target_subopt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target suboptimality must be positive, got {target_subopt}"
        )));
    }

    let mut measured = Vec::with_capacity(cores.len());
    for &c in cores {
        let mut iterations = 0u64;
        let mut seconds = 0.0;
        let mut all_reached = true;
        for r in 0..repeats {
            let mut cfg = config.clone();
            cfg.threads = c;
            cfg.snapshot = SnapshotMode::Inline;
            cfg.solver.seed = config.solver.seed.wrapping_add(r as u64);
            cfg.solver.target_objective = Some(f_star + target_subopt);
            let trace = run_async(problem, &cfg)?;
            let hit = trace
                .checkpoints
                .iter()
                .find(|ck| ck.objective - f_star <= target_subopt);
            log::info!(
                "cores={c} repeat={r}: target reached at {:?}",
                hit.map(|h| h.iterations)
            );
            match hit {
                Some(h) => {
                    iterations += h.iterations;
                    seconds += h.wall_seconds;
                }
                None => all_reached = false,
            }
        }
        let hit =
            all_reached.then(|| (iterations as f64 / repeats as f64, seconds / repeats as f64));
        measured.push((c, hit));
    }

    let base = measured[0].1;
    let rows = measured
        .into_iter()
        .map(|(c, hit)| {
            let (wall, theory) = match (base, hit) {
                (Some((it1, s1)), Some((it, s))) => (
                    if s > 0.0 { s1 / s } else { f64::NAN },
                    c as f64 * it1 / it.max(1.0),
                ),
                _ => (f64::NAN, f64::NAN),
            };
            // The one-core row is the reference by definition.
            let (wall, theory) = if c == 1 && hit.is_some() {
                (1.0, 1.0)
            } else {
                (wall, theory)
            };
            SpeedupRow {
                cores: c,
                wall_speedup: wall,
                theoretical_speedup: theory,
                reached: hit.is_some(),
                iterations_to_target: hit.map(|h| h.0),
                seconds_to_target: hit.map(|h| h.1),
            }
        })
        .collect();

    Ok(SpeedupTable {
        delta: problem.index().delta(),
        lipschitz: problem.lipschitz(),
        kappa: problem.kappa(),
        target: target_subopt,
        rows,
    })
}
