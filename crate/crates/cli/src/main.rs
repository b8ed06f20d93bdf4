//! `hybridplan` command-line entry point.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 bad input data,
//! 4 problem generation gave up.

mod commands;
mod opts;

use std::process::ExitCode;

use clap::Parser;

use crate::opts::{Cli, Opts};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Exhausted(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Exhausted(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Exhausted(m) => write!(f, "generation exhausted: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let opts = match &cli.config {
        Some(path) => cli.opts.merge(Opts::load_file(path)?),
        None => cli.opts,
    };
    if let Some(jobs) = opts.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    commands::execute(cli.command, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet_stdout = cli.opts.out.is_none() && matches!(cli.command, opts::Command::Eval | opts::Command::Sweep);
    match run(cli) {
        Ok(summary) => {
            if quiet_stdout {
                eprintln!("{summary}");
            } else {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hybridplan: {e}");
            ExitCode::from(e.code())
        }
    }
}
