use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod io;
mod report;

use config::{Cli, Command, FileConfig};

/// Exit 2 for usage/config problems, 1 for runtime failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Whether every file processed cleanly.
pub type Outcome = Result<bool, CliError>;

fn run(cli: Cli) -> Outcome {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    commands::init_thread_pool();
    match cli.command {
        Command::Decompose(args) => commands::decompose::run(&args, &cfg),
        Command::Reconstruct(args) => commands::reconstruct::run(&args, &cfg),
        Command::Enhance(args) => commands::enhance::run(&args, &cfg),
        Command::NoiseSim(args) => commands::noise_sim::run(&args, &cfg),
        Command::Metrics(args) => commands::metrics::run(&args, &cfg),
        Command::RoundtripCheck(args) => commands::roundtrip::run(&args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
