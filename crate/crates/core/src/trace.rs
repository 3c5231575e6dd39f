//! Convergence traces and their on-disk formats.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::ProblemSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iterations: u64,
    pub epochs: f64,
    pub objective: f64,
    pub wall_seconds: f64,
    /// Value of the batched global counter (asynchronous runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter_iterations: Option<u64>,
    /// `||x - x_ref||^2` when a reference point was configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    SparseSaga,
    DenseSaga,
    ProxAsaga,
    Fista,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub solver: SolverKind,
    pub threads: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub final_x: Vec<f64>,
}

impl Trace {
    pub fn final_objective(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.objective)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.objective).collect()
    }

    fn has_counter(&self) -> bool {
        self.solver == SolverKind::ProxAsaga
    }

    /// CSV with header `iterations,epochs,objective,wall_seconds`; asynchronous
    /// traces add `threads,counter_iterations`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let async_cols = self.has_counter();
        if async_cols {
            writeln!(
                out,
                "iterations,epochs,objective,wall_seconds,threads,counter_iterations"
            )?;
        } else {
            writeln!(out, "iterations,epochs,objective,wall_seconds")?;
        }
        for c in &self.checkpoints {
            write!(
                out,
                "{},{:?},{:?},{:?}",
                c.iterations, c.epochs, c.objective, c.wall_seconds
            )?;
            if async_cols {
                write!(
                    out,
                    ",{},{}",
                    self.threads,
                    c.counter_iterations.unwrap_or(c.iterations)
                )?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// JSON written next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub solver: SolverKind,
    pub threads: usize,
    pub gamma: f64,
    pub config: serde_json::Value,
    pub problem: ProblemSummary,
    pub final_objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_suboptimality: Option<f64>,
    /// Command line that produced the trace.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invocation: Vec<String>,
}

/// Writes `<path>` (CSV) and `<path>.json` (sidecar).
pub fn write_trace_files(path: &Path, trace: &Trace, sidecar: &TraceSidecar) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    trace.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    let file = std::fs::File::create(json_path)?;
    serde_json::to_writer_pretty(file, sidecar)?;
    Ok(())
}
