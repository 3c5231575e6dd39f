//! Fully resolved problem and run descriptions. These are what the JSON
//! sidecars store, so a run can be rebuilt without the original flags.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use proxsaga::synthetic::{
    gen_regularization, gen_sparse_glm, RegularizationSearch, SparsePenalty,
};
use proxsaga::{BlockPartition, Dataset, Loss, LossKind, Penalty, StepSize};
use serde::{Deserialize, Serialize};

use crate::args::{Lambda1Arg, Lambda2Arg, PenaltyArg, ProblemArgs, SolverArg};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    Libsvm {
        path: PathBuf,
        n_features: Option<usize>,
    },
    Synthetic {
        n: usize,
        p: usize,
        density: f64,
        seed: u64,
        /// Label model of the generator.
        labels: LossKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlocksSpec {
    Singleton,
    Single,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub data: DataSpec,
    pub blocks: BlocksSpec,
    pub loss: Loss,
    pub penalty: Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sps,
    Dense,
    Fista,
}

impl From<SolverArg> for Method {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Sps => Method::Sps,
            SolverArg::Dense => Method::Dense,
            SolverArg::Fista => Method::Fista,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub method: Method,
    pub step: StepSize,
    pub epochs: usize,
    pub threads: usize,
    pub seed: u64,
    pub checkpoint_every: Option<usize>,
    pub optimum: bool,
}

/// Everything a solve needs; stored as the sidecar `config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub problem: ProblemSpec,
    pub run: RunSpec,
}

impl DataSpec {
    pub fn load(&self) -> Result<Dataset, CliError> {
        match self {
            DataSpec::Libsvm { path, n_features } => {
                proxsaga::data::read_libsvm_file(path, *n_features)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
            }
            DataSpec::Synthetic {
                n,
                p,
                density,
                seed,
                labels,
            } => gen_sparse_glm(*n, *p, *density, *seed, *labels)
                .map_err(|e| CliError::Usage(format!("invalid --synthetic: {e}"))),
        }
    }
}

impl BlocksSpec {
    fn parse(values: &[String]) -> Result<Self, CliError> {
        match values {
            [kind] if kind == "singleton" => Ok(BlocksSpec::Singleton),
            [kind] if kind == "single" => Ok(BlocksSpec::Single),
            [kind, path] if kind == "file" => Ok(BlocksSpec::File { path: path.into() }),
            [kind] if kind.starts_with("file:") => Ok(BlocksSpec::File {
                path: kind["file:".len()..].into(),
            }),
            other => Err(CliError::Usage(format!(
                "--blocks expects `singleton`, `single` or `file PATH`, got {other:?}"
            ))),
        }
    }

    pub fn load(&self, p: usize) -> Result<BlockPartition, CliError> {
        match self {
            BlocksSpec::Singleton => BlockPartition::singleton(p).map_err(CliError::Solver),
            BlocksSpec::Single => BlockPartition::single_block(p).map_err(CliError::Solver),
            BlocksSpec::File { path } => {
                let file = File::open(path)
                    .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
                BlockPartition::read(BufReader::new(file), p)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
            }
        }
    }
}

/// Loaded data and partition, which a `Problem` borrows.
pub struct Materials {
    pub data: Dataset,
    pub partition: BlockPartition,
}

impl ProblemSpec {
    pub fn materials(&self) -> Result<Materials, CliError> {
        let data = self.data.load()?;
        let partition = self.blocks.load(data.n_features())?;
        Ok(Materials { data, partition })
    }
}

/// Turns problem flags into a [`ProblemSpec`], running the regularization
/// search when `--lambda2 auto-nnz=F` is given.
pub fn resolve_problem(args: &ProblemArgs) -> Result<(ProblemSpec, Materials), CliError> {
    let data_spec = match (&args.source.data, args.source.synthetic) {
        (Some(path), None) => DataSpec::Libsvm {
            path: path.clone(),
            n_features: args.n_features,
        },
        (None, Some(s)) => DataSpec::Synthetic {
            n: s.n,
            p: s.p,
            density: s.density,
            seed: s.seed,
            labels: args.loss.into(),
        },
        _ => {
            return Err(CliError::Usage(
                "exactly one of --data and --synthetic is required".into(),
            ))
        }
    };
    let blocks = BlocksSpec::parse(&args.blocks)?;
    let data = data_spec.load()?;
    let partition = blocks.load(data.n_features())?;

    let lambda1 = match args.lambda1 {
        Lambda1Arg::Auto => 1.0 / data.n_samples() as f64,
        Lambda1Arg::Value(v) => v,
    };
    let kind: LossKind = args.loss.into();
    let loss = Loss::new(kind, lambda1).map_err(|e| CliError::Usage(e.to_string()))?;

    let family = match args.penalty {
        PenaltyArg::L1 => Some(SparsePenalty::L1),
        PenaltyArg::GroupL1 => Some(SparsePenalty::GroupL2),
        PenaltyArg::None | PenaltyArg::Box => None,
    };
    let penalty = match (args.penalty, family, args.lambda2) {
        (PenaltyArg::None, _, None) => Penalty::Zero,
        (PenaltyArg::Box, _, None) => Penalty::box_constraint(args.bounds.lo, args.bounds.hi)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        (PenaltyArg::None | PenaltyArg::Box, _, Some(_)) => {
            return Err(CliError::Usage(
                "--lambda2 only applies to the l1 and group-l1 penalties".into(),
            ))
        }
        (_, Some(_), None) => {
            return Err(CliError::Usage(
                "--lambda2 is required for this penalty".into(),
            ))
        }
        (_, Some(family), Some(Lambda2Arg::Value(v))) => family
            .with_lambda(v)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        (_, Some(family), Some(Lambda2Arg::AutoNnz(target))) => {
            let search = RegularizationSearch {
                loss: kind,
                penalty: family,
                ..RegularizationSearch::default()
            };
            let (_, lambda2) =
                gen_regularization(&data, &partition, target, &search).map_err(CliError::Solver)?;
            log::info!("tuned lambda2 = {lambda2:e} for nonzero fraction {target}");
            family.with_lambda(lambda2).map_err(CliError::Solver)?
        }
        (_, None, _) => unreachable!("penalties without a weight are handled above"),
    };

    Ok((
        ProblemSpec {
            data: data_spec,
            blocks,
            loss,
            penalty,
        },
        Materials { data, partition },
    ))
}
