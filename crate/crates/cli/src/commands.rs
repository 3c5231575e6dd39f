use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use proxsaga::diagnostics::cached_optimum;
use proxsaga::diagnostics::verify::run_suite;
use proxsaga::fista::run_fista_threads;
use proxsaga::parallel::{measure_speedup, SpeedupTable};
use proxsaga::saga::{run_dense_saga, run_sequential};
use proxsaga::synthetic::{gen_banded_glm, gen_sparse_glm};
use proxsaga::trace::{write_trace_files, TraceSidecar};
use proxsaga::{run_async, AsyncConfig, Problem, SolverConfig, Trace};
use serde::{Deserialize, Serialize};

use crate::args::{GenerateArgs, ReplayArgs, SolveArgs, SpeedupArgs, VerifyArgs};
use crate::spec::{resolve_problem, Materials, Method, ProblemSpec, RunSpec, SolveSpec};
use crate::CliError;

fn to_usize(v: u64, flag: &str) -> Result<usize, CliError> {
    usize::try_from(v).map_err(|_| CliError::Usage(format!("{flag} is too large")))
}

fn build_problem<'a>(spec: &ProblemSpec, m: &'a Materials) -> Result<Problem<'a>, CliError> {
    Ok(Problem::new(
        &m.data,
        spec.loss,
        spec.penalty,
        &m.partition,
    )?)
}

fn run_solver(problem: &Problem<'_>, run: &RunSpec) -> Result<Trace, CliError> {
    let config = SolverConfig {
        step: run.step,
        epochs: run.epochs,
        seed: run.seed,
        checkpoint_every: run.checkpoint_every,
        ..SolverConfig::default()
    };
    let trace = match (run.method, run.threads) {
        (Method::Sps, 1) => run_sequential(problem, &config)?,
        (Method::Sps, t) => run_async(problem, &AsyncConfig::new(t, config))?,
        (Method::Dense, 1) => run_dense_saga(problem, &config)?,
        (Method::Dense, _) => {
            return Err(CliError::Usage(
                "the dense solver is single-threaded".into(),
            ))
        }
        (Method::Fista, t) => run_fista_threads(problem, &config, t)?,
    };
    Ok(trace)
}

/// Runs `spec` and writes the trace and its sidecar.
fn execute(
    spec: &SolveSpec,
    m: &Materials,
    out: &Path,
    invocation: Vec<String>,
) -> Result<(), CliError> {
    let problem = build_problem(&spec.problem, m)?;
    let trace = run_solver(&problem, &spec.run)?;
    let final_objective = trace.final_objective();
    let final_suboptimality = if spec.run.optimum {
        let opt = cached_optimum(&problem)?;
        Some(final_objective - opt.objective)
    } else {
        None
    };
    let sidecar = TraceSidecar {
        solver: trace.solver,
        threads: trace.threads,
        gamma: problem.step_size(spec.run.step)?,
        config: serde_json::to_value(spec).map_err(proxsaga::Error::from)?,
        problem: problem.summary(),
        final_objective,
        final_suboptimality,
        invocation,
    };
    write_trace_files(out, &trace, &sidecar)?;
    match final_suboptimality {
        Some(s) => eprintln!("final objective {final_objective:.17e}, suboptimality {s:e}"),
        None => eprintln!("final objective {final_objective:.17e}"),
    }
    Ok(())
}

pub fn solve(args: &SolveArgs, invocation: Vec<String>) -> Result<(), CliError> {
    let (problem, materials) = resolve_problem(&args.problem)?;
    let spec = SolveSpec {
        problem,
        run: RunSpec {
            method: args.solver.into(),
            step: args.step,
            epochs: to_usize(args.epochs, "--epochs")?,
            threads: to_usize(args.threads, "--threads")?,
            seed: args.seed,
            checkpoint_every: args
                .checkpoint_every
                .map(|c| to_usize(c, "--checkpoint-every"))
                .transpose()?,
            optimum: args.optimum,
        },
    };
    execute(&spec, &materials, &args.trace_out, invocation)
}

pub fn replay(args: &ReplayArgs, invocation: Vec<String>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.sidecar)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.sidecar.display())))?;
    let sidecar: TraceSidecar = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "{} is not a trace sidecar: {e}",
            args.sidecar.display()
        ))
    })?;
    let spec: SolveSpec = serde_json::from_value(sidecar.config).map_err(|e| {
        CliError::Usage(format!("{}: unusable config: {e}", args.sidecar.display()))
    })?;
    let materials = spec.problem.materials()?;
    let hash = build_problem(&spec.problem, &materials)?.hash();
    if hash != sidecar.problem.problem_hash {
        return Err(CliError::Usage(format!(
            "the rebuilt problem differs from the recorded one (hash {hash}, recorded {})",
            sidecar.problem.problem_hash
        )));
    }
    execute(&spec, &materials, &args.trace_out, invocation)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpeedupSidecar {
    problem: ProblemSpec,
    config: AsyncConfig,
    f_star: f64,
    repeats: usize,
    table: SpeedupTable,
    invocation: Vec<String>,
}

pub fn speedup(args: &SpeedupArgs, invocation: Vec<String>) -> Result<(), CliError> {
    if args.cores.first() != Some(&1) || args.cores.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "--cores must start with 1 and be strictly increasing".into(),
        ));
    }
    if !(args.target > 0.0) {
        return Err(CliError::Usage("--target must be positive".into()));
    }
    let (spec, materials) = resolve_problem(&args.problem)?;
    let problem = build_problem(&spec, &materials)?;
    let f_star = cached_optimum(&problem)?.objective;
    let config = AsyncConfig::new(
        1,
        SolverConfig {
            step: args.step,
            epochs: to_usize(args.epochs, "--epochs")?,
            seed: args.seed,
            checkpoint_every: args
                .checkpoint_every
                .map(|c| to_usize(c, "--checkpoint-every"))
                .transpose()?,
            ..SolverConfig::default()
        },
    );
    let repeats = to_usize(args.repeats, "--repeats")?;
    let table = measure_speedup(&problem, &config, &args.cores, args.target, f_star, repeats)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "# delta={:?} lipschitz={:?} kappa={:?} target={:?}",
        table.delta, table.lipschitz, table.kappa, table.target
    )
    .map_err(proxsaga::Error::from)?;
    match &args.out {
        Some(path) => {
            table.write_csv(BufWriter::new(
                File::create(path).map_err(proxsaga::Error::from)?,
            ))?;
            let sidecar = SpeedupSidecar {
                problem: spec,
                config,
                f_star,
                repeats,
                table: table.clone(),
                invocation,
            };
            let mut json_path = path.as_os_str().to_owned();
            json_path.push(".json");
            let file = File::create(json_path).map_err(proxsaga::Error::from)?;
            serde_json::to_writer_pretty(file, &sidecar).map_err(proxsaga::Error::from)?;
            table.write_csv(&mut out)?;
        }
        None => table.write_csv(&mut out)?,
    }
    for row in table.rows.iter().filter(|r| !r.reached) {
        log::warn!(
            "{} cores did not reach the target within the epoch budget",
            row.cores
        );
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let report = run_suite(args.only);
    for p in &report.properties {
        eprintln!(
            "{} {} {:e} (tolerance {:e}) {}",
            if p.passed { "PASS" } else { "FAIL" },
            p.name,
            p.max_violation,
            p.tolerance,
            p.detail
        );
    }
    let json = serde_json::to_string_pretty(&report).map_err(proxsaga::Error::from)?;
    println!("{json}");
    if let Some(path) = &args.report {
        std::fs::write(path, &json).map_err(proxsaga::Error::from)?;
    }
    let failed = report.properties.iter().filter(|p| !p.passed).count();
    if failed > 0 {
        return Err(CliError::PropertiesFailed(failed));
    }
    Ok(())
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let kind = args.loss.into();
    let data = match (args.generator.synthetic, args.generator.banded) {
        (Some(s), None) => gen_sparse_glm(s.n, s.p, s.density, s.seed, kind),
        (None, Some(b)) => gen_banded_glm(b.n, b.p, b.width, b.seed, kind),
        _ => {
            return Err(CliError::Usage(
                "exactly one of --synthetic and --banded is required".into(),
            ))
        }
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let file = File::create(&args.out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", args.out.display())))?;
    proxsaga::data::write_libsvm(&data, BufWriter::new(file))?;
    eprintln!(
        "wrote {} samples, {} features, {} nonzeros to {}",
        data.n_samples(),
        data.n_features(),
        data.features().nnz(),
        args.out.display()
    );
    Ok(())
}
