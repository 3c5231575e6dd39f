//! Suboptimality against a cached optimum, rate-envelope checks, independent
//! oracles and the property suite behind `proxsaga verify`.

mod optimum;
pub mod oracles;
mod prox_search;
mod rate;
pub mod verify;

pub use optimum::{cache_dir, cached_optimum, compute_optimum, Optimum, CACHE_ENV};
pub use prox_search::brute_force_prox;
pub use rate::{
    initial_constant, rate_envelope_check, sequential_rate, EnvelopeEntry, EnvelopeReport,
};

use crate::error::{Error, Result};
use crate::trace::Trace;

/// How far below the reference optimum a checkpoint may fall and still be
/// treated as rounding.
pub const STALE_SLACK: f64 = 1e-12;

/// `objective - f_star` per checkpoint, with values in `[-STALE_SLACK, 0)`
/// clamped to zero.
pub fn suboptimality(trace: &Trace, f_star: f64) -> Result<Vec<f64>> {
    trace
        .checkpoints
        .iter()
        .enumerate()
        .map(|(index, c)| {
            let gap = c.objective - f_star;
            if gap < -STALE_SLACK {
                Err(Error::StaleOptimum { index, gap })
            } else {
                Ok(gap.max(0.0))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Checkpoint, SolverKind};

    fn trace(objectives: &[f64]) -> Trace {
        Trace {
            solver: SolverKind::SparseSaga,
            threads: 1,
            checkpoints: objectives
                .iter()
                .enumerate()
                .map(|(k, &objective)| Checkpoint {
                    iterations: k as u64,
                    epochs: k as f64,
                    objective,
                    wall_seconds: 0.0,
                    counter_iterations: None,
                    distance_sq: None,
                })
                .collect(),
            final_x: vec![],
        }
    }

    #[test]
    fn at_optimum_all_zero() {
        assert_eq!(
            suboptimality(&trace(&[0.5, 0.5]), 0.5).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn clamps_rounding_and_rejects_stale() {
        let s = suboptimality(&trace(&[1.0, 0.5 - 1e-13]), 0.5).unwrap();
        assert_eq!(s, vec![0.5, 0.0]);
        match suboptimality(&trace(&[1.0, 0.5 - 1e-9]), 0.5) {
            Err(Error::StaleOptimum { index: 1, .. }) => {}
            other => panic!("expected stale optimum, got {other:?}"),
        }
    }
}
