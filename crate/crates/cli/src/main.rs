use std::path::PathBuf;
use std::process::ExitCode;

use alloyfreeze::{load_config, run, Command};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    Reproduce,
    SweepEps,
    Check,
}

/// Regularized binary-alloy solidification solver.
#[derive(Debug, Parser)]
#[command(name = "alloyfreeze", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized initial states, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let cmd = match args.command {
        Sub::Simulate => Command::Simulate,
        Sub::Reproduce => Command::Reproduce,
        Sub::SweepEps => Command::SweepEps,
        Sub::Check => Command::Check,
    };
    let out = cfg.output.dir.clone();
    match run(cmd, &cfg, &out) {
        Ok(outcome) => {
            for (k, v) in &outcome.summary {
                println!("{k}: {v}");
            }
            println!("output: {}", outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
