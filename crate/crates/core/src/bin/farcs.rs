use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use farcs::harness::{run_with_threads, write_outputs, ExperimentConfig, ExperimentKind, Overrides};
use farcs::Error;

/// Frequency agile radar compressed-sensing experiments.
#[derive(Parser)]
#[command(name = "farcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spark check by exhaustive submatrix enumeration.
    Spark(Common),
    /// Mutual-coherence distribution against the union bound.
    Mip(Common),
    /// Noiseless phase transition: basis pursuit vs matched filter.
    Phase(Common),
    /// Noisy recovery: subspace pursuit vs Lasso.
    Noisy(Common),
    /// Closed-form recoverable-sparsity bounds.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte-Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; the JSON sidecar and companion CSVs go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn execute(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>, Error> {
    let overrides = Overrides {
        n_trials: args.trials,
        master_seed: args.seed,
        output: args.out,
    };
    let config = ExperimentConfig::resolve(kind, args.config.as_deref(), &overrides)?;
    let result = run_with_threads(&config, args.threads)?;
    write_outputs(&config, &result)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    let (kind, args) = match cli.command {
        Command::Spark(a) => (ExperimentKind::Spark, a),
        Command::Mip(a) => (ExperimentKind::Mip, a),
        Command::Phase(a) => (ExperimentKind::PhaseTransition, a),
        Command::Noisy(a) => (ExperimentKind::NoisyRecovery, a),
        Command::Bounds(a) => (ExperimentKind::Bounds, a),
    };
    match execute(kind, args) {
        Ok(files) => {
            let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({ "experiment": kind.name(), "files": files }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
