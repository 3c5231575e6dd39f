#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod spec;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Exit codes: 0 success, 1 property failure, 2 usage, 3 solver error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] proxsaga::Error),
    #[error("{0} properties failed")]
    PropertiesFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::PropertiesFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let invocation: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a, invocation),
        Command::Replay(a) => commands::replay(&a, invocation),
        Command::Speedup(a) => commands::speedup(&a, invocation),
        Command::Verify(a) => commands::verify(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
