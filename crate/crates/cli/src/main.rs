//! `forgesim`: train forged ground states, evaluate checkpoints, check models.

mod commands;
mod failure;
mod output;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "forgesim", version, about = "Entanglement-forging ground-state solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write trace, correlators, summary and checkpoints.
    Run(Box<commands::RunArgs>),
    /// Evaluate energy or Pauli observables from a checkpoint.
    Eval(commands::EvalArgs),
    /// Check a model's partition and print the report.
    Validate(settings::ModelArgs),
    /// Exact diagonalization reference: ground energy and correlators.
    Ed(commands::EdArgs),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FORGESIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("FORGESIM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run(a) => commands::run(*a),
        Command::Eval(a) => commands::eval(a),
        Command::Validate(a) => commands::validate(a),
        Command::Ed(a) => commands::ed(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
