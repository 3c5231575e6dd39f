//! Sparse Proximal SAGA and its lock-free asynchronous variant for composite
//! finite-sum problems `min_x (1/n) sum_i f_i(x) + h(x)`, where each `f_i` is a
//! smooth loss of a linear model and `h` is block separable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod fista;
pub mod loss;
pub mod parallel;
pub mod penalty;
pub mod problem;
pub mod rng;
pub mod saga;
pub mod synthetic;
pub mod trace;

pub use config::{SolverConfig, StepRule, StepSize};
pub use data::{BlockPartition, CsrMatrix, Dataset, DeadBlockPolicy, SupportIndex};
pub use error::{Error, Result};
pub use loss::{Loss, LossKind};
pub use parallel::{run_async, AsyncConfig};
pub use penalty::Penalty;
pub use problem::Problem;
pub use trace::{Checkpoint, SolverKind, Trace};
