use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use proxsaga::diagnostics::verify::PropertyGroup;
use proxsaga::{LossKind, StepSize};

#[derive(Debug, Parser)]
#[command(
    name = "proxsaga",
    version,
    about = "Sparse proximal SAGA solvers for composite finite-sum problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write its convergence trace.
    Solve(SolveArgs),
    /// Rerun a solve from the JSON sidecar it wrote.
    Replay(ReplayArgs),
    /// Measure asynchronous speedup over a list of core counts.
    Speedup(SpeedupArgs),
    /// Run the property suite and print a JSON report.
    Verify(VerifyArgs),
    /// Write a synthetic dataset in LibSVM format.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Logistic,
    Squared,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Squared => LossKind::Squared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    None,
    L1,
    GroupL1,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    /// Sparse proximal SAGA; asynchronous when `--threads` > 1.
    Sps,
    /// Dense proximal SAGA (single thread only).
    Dense,
    /// FISTA with backtracking; `--threads` parallelizes the full gradient.
    Fista,
}

/// `n,p,density,seed`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticArg {
    pub n: usize,
    pub p: usize,
    pub density: f64,
    pub seed: u64,
}

impl FromStr for SyntheticArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, p, density, seed] = parts[..] else {
            return Err(format!("expected n,p,density,seed; got {s:?}"));
        };
        Ok(Self {
            n: n.parse().map_err(|_| format!("invalid n {n:?}"))?,
            p: p.parse().map_err(|_| format!("invalid p {p:?}"))?,
            density: density
                .parse()
                .map_err(|_| format!("invalid density {density:?}"))?,
            seed: seed.parse().map_err(|_| format!("invalid seed {seed:?}"))?,
        })
    }
}

/// `n,p,width,seed`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandedArg {
    pub n: usize,
    pub p: usize,
    pub width: usize,
    pub seed: u64,
}

impl FromStr for BandedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, p, width, seed] = parts[..] else {
            return Err(format!("expected n,p,width,seed; got {s:?}"));
        };
        Ok(Self {
            n: n.parse().map_err(|_| format!("invalid n {n:?}"))?,
            p: p.parse().map_err(|_| format!("invalid p {p:?}"))?,
            width: width
                .parse()
                .map_err(|_| format!("invalid width {width:?}"))?,
            seed: seed.parse().map_err(|_| format!("invalid seed {seed:?}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda1Arg {
    Auto,
    Value(f64),
}

impl FromStr for Lambda1Arg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Lambda1Arg::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected a number or `auto`, got {s:?}"))?;
        if v >= 0.0 && v.is_finite() {
            Ok(Lambda1Arg::Value(v))
        } else {
            Err(format!("lambda1 must be nonnegative, got {v}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda2Arg {
    /// Tune for this fraction of nonzero coefficients.
    AutoNnz(f64),
    Value(f64),
}

impl FromStr for Lambda2Arg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(frac) = s.strip_prefix("auto-nnz=") {
            let f: f64 = frac
                .parse()
                .map_err(|_| format!("invalid nonzero fraction {frac:?}"))?;
            if f > 0.0 && f <= 1.0 {
                return Ok(Lambda2Arg::AutoNnz(f));
            }
            return Err(format!("nonzero fraction must be in (0, 1], got {f}"));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected a number or `auto-nnz=F`, got {s:?}"))?;
        if v >= 0.0 && v.is_finite() {
            Ok(Lambda2Arg::Value(v))
        } else {
            Err(format!("lambda2 must be nonnegative, got {v}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsArg {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for BoundsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("expected LO,HI; got {s:?}"))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| format!("invalid bound {lo:?}"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| format!("invalid bound {hi:?}"))?;
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(format!("empty box [{lo}, {hi}]"))
        }
    }
}

fn parse_step(s: &str) -> Result<StepSize, String> {
    s.parse().map_err(|e: proxsaga::Error| e.to_string())
}

fn parse_group(s: &str) -> Result<PropertyGroup, String> {
    s.parse().map_err(|e: proxsaga::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// LibSVM dataset (optionally gzip-compressed).
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Synthetic sparse dataset `n,p,density,seed`.
    #[arg(long, value_name = "N,P,DENSITY,SEED")]
    pub synthetic: Option<SyntheticArg>,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of features of a LibSVM dataset; the largest index seen by default.
    #[arg(long, value_name = "P", requires = "data")]
    pub n_features: Option<usize>,
    #[arg(long, value_enum, default_value = "logistic")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "none")]
    pub penalty: PenaltyArg,
    /// Strong-convexity weight, or `auto` for 1/n.
    #[arg(long, default_value = "auto", value_name = "FLOAT|auto")]
    pub lambda1: Lambda1Arg,
    /// Penalty weight, or `auto-nnz=F` to tune it for a fraction F of
    /// nonzero coefficients.
    #[arg(long, value_name = "FLOAT|auto-nnz=F")]
    pub lambda2: Option<Lambda2Arg>,
    /// Bounds of the box penalty.
    #[arg(
        long = "box",
        value_name = "LO,HI",
        default_value = "0,1",
        allow_hyphen_values = true
    )]
    pub bounds: BoundsArg,
    /// Block partition: `singleton`, `single`, or `file PATH`.
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "PATH"], default_value = "singleton")]
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "sps")]
    pub solver: SolverArg,
    /// Step size: a number, or one of 1/5L, 1/2L, 1/36L.
    #[arg(long, default_value = "1/5L", value_parser = parse_step)]
    pub step: StepSize,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iterations between checkpoints; one epoch by default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub checkpoint_every: Option<u64>,
    /// Also load (or compute and cache) the optimum and report the final
    /// suboptimality.
    #[arg(long)]
    pub optimum: bool,
    /// Trace CSV; the sidecar goes to `<PATH>.json`.
    #[arg(long, value_name = "PATH")]
    pub trace_out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Sidecar written by `solve`.
    pub sidecar: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub trace_out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpeedupArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Core counts, starting with 1 and strictly increasing.
    #[arg(long, default_value = "1,2,4", value_delimiter = ',')]
    pub cores: Vec<usize>,
    /// Target suboptimality.
    #[arg(long, default_value_t = 1e-10)]
    pub target: f64,
    #[arg(long, default_value = "1/5L", value_parser = parse_step)]
    pub step: StepSize,
    /// Epoch budget per run.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Runs per core count; iteration counts and times are averaged.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Iterations between checkpoints; one epoch by default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub checkpoint_every: Option<u64>,
    /// Write the CSV here (with a JSON sidecar) instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Run one group: prox, lemma, oracle, rate or async.
    #[arg(long, value_parser = parse_group)]
    pub only: Option<PropertyGroup>,
    /// Also write the JSON report to this file.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[group(id = "generator", required = true, multiple = false)]
pub struct GeneratorArgs {
    /// Random sparse rows: `n,p,density,seed`.
    #[arg(long, value_name = "N,P,DENSITY,SEED")]
    pub synthetic: Option<SyntheticArg>,
    /// Banded rows: `n,p,width,seed`.
    #[arg(long, value_name = "N,P,WIDTH,SEED")]
    pub banded: Option<BandedArg>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum, default_value = "logistic")]
    pub loss: LossArg,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}
