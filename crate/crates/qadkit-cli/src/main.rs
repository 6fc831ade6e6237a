//! `qadkit` — dataset synthesis, detector runs, the validation suite and
//! plot-ready sweeps for quantum anomaly detection.
//!
//! Subcommands: `generate`, `score`, `validate`, `sweep`. Every run is
//! deterministic given its configuration and seed; `QADKIT_SEED` supplies a
//! default seed when neither the flags nor the config file give one.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical/degeneracy error. Failures print a machine-readable JSON
//! object on stderr naming the module, operation and violated precondition.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

use qadkit::QadError;

#[derive(Parser)]
#[command(name = "qadkit", version, about = "Anomaly detection for quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset file from a deterministic recipe.
    Generate(commands::GenerateArgs),
    /// Score a dataset's test state with a detector.
    Score(commands::ScoreArgs),
    /// Run the oracle-equivalence and invariant suites.
    Validate(commands::ValidateArgs),
    /// Emit plot-ready CSV over a shots, theta or evolution-steps grid.
    Sweep(commands::SweepArgs),
}

/// Error class to exit code: configuration problems are 2, numerical and
/// degeneracy conditions are 3.
fn exit_code_for(err: &QadError) -> u8 {
    match err.kind() {
        "degenerate" | "invariant" => 3,
        _ => 2,
    }
}

fn emit_error(err: &QadError) {
    let doc = serde_json::json!({
        "module": err.module(),
        "operation": err.operation(),
        "kind": err.kind(),
        "precondition": err.to_string(),
    });
    eprintln!("{doc}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Score(args) => commands::score(args),
        Command::Validate(args) => return commands::validate(args),
        Command::Sweep(args) => commands::sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            emit_error(&err);
            ExitCode::from(exit_code_for(&err))
        }
    }
}
