use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::Result;
use crate::problem::Problem;
use crate::saga::{fixed_point_residual, run_dense_saga, run_sequential};

/// Environment variable naming the optimum cache directory.
pub const CACHE_ENV: &str = "PROXSAGA_CACHE_DIR";

/// Sample stream used for optimum computations, distinct from the default
/// seed of the solvers under test.
const OPTIMUM_SEED: u64 = 0x0b5e_55ed;

/// Bumped whenever the way optima are computed changes.
const CACHE_VERSION: &str = "v1";

/// Largest `n * p` for which the dense solver is used.
const DENSE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub problem_hash: String,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Fixed-point residual at `x` for step `1/(5L)`.
    pub residual: f64,
    pub epochs: f64,
}

/// High-precision solution from a long SAGA run at step `1/(5L)`: 5000
/// epochs of the dense solver for small problems, 2000 epochs of the
/// sparse solver otherwise.
pub fn compute_optimum(problem: &Problem<'_>) -> Result<Optimum> {
    let dense = problem.n_samples() * problem.n_features() <= DENSE_LIMIT;
    let config = SolverConfig {
        epochs: if dense { 5000 } else { 2000 },
        seed: OPTIMUM_SEED,
        checkpoint_every: Some(problem.n_samples() * 100),
        ..SolverConfig::default()
    };
    let trace = if dense {
        run_dense_saga(problem, &config)?
    } else {
        run_sequential(problem, &config)?
    };
    let gamma = problem.step_size(config.step)?;
    let residual = fixed_point_residual(problem, &trace.final_x, gamma)?;
    Ok(Optimum {
        problem_hash: problem.hash(),
        objective: problem.objective(&trace.final_x),
        epochs: trace.checkpoints.last().map_or(0.0, |c| c.epochs),
        x: trace.final_x,
        residual,
    })
}

/// `$PROXSAGA_CACHE_DIR`, or `proxsaga-cache` under the system temp dir.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("proxsaga-cache"))
}

/// Optimum from the cache, keyed by the problem hash; computed and stored
/// when missing or when the stored entry does not match the problem.
pub fn cached_optimum(problem: &Problem<'_>) -> Result<Optimum> {
    let hash = problem.hash();
    let dir = cache_dir();
    let path = dir.join(format!("{hash}.{CACHE_VERSION}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<Optimum>(&text) {
            Ok(opt) if opt.problem_hash == hash && opt.x.len() == problem.n_features() => {
                return Ok(opt);
            }
            _ => log::warn!("discarding unusable optimum cache entry {}", path.display()),
        }
    }
    let opt = compute_optimum(problem)?;
    fs::create_dir_all(&dir)?;
    // Write then rename so concurrent readers never see a partial file.
    static WRITES: AtomicUsize = AtomicUsize::new(0);
    let tmp = dir.join(format!(
        "{hash}.{}.{}.tmp",
        std::process::id(),
        WRITES.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, serde_json::to_string(&opt)?)?;
    fs::rename(&tmp, &path)?;
    Ok(opt)
}
