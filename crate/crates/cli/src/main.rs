#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analysis;
mod cache;
mod cli;
mod decode;
mod error;
mod output;
mod spectrum;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command, Common};
use error::CliError;

fn common(command: &Command) -> &Common {
    match command {
        Command::Decode(a) => &a.common,
        Command::Se(a) => &a.common,
        Command::Potential(a) => &a.common,
        Command::Thresholds(a) => &a.common,
        Command::Asymptotic(a) => &a.common,
        Command::SpectrumCheck(a) => &a.common,
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Decode(a) => decode::run(a),
        Command::Se(a) => analysis::run_se(a),
        Command::Potential(a) => analysis::run_potential(a),
        Command::Thresholds(a) => analysis::run_thresholds(a),
        Command::Asymptotic(a) => analysis::run_asymptotic(a),
        Command::SpectrumCheck(a) => spectrum::run(a),
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    match common(command).threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => pool = pool.num_threads(n),
        None => {}
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
