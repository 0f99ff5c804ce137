use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ncbundle::cli::{run, RunOptions};

#[derive(Parser)]
#[command(name = "ncbundle", version, about = "Run noncommutative principal bundle scenarios and report residuals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every scenario in a config and write a JSON report.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-scenario spectrum CSVs.
        #[arg(long)]
        emit_spectra: Option<PathBuf>,
        /// Seed for randomised checks; overrides the config seed (default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance applied to every check without a per-scenario override.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, emit_spectra, seed, tol } => {
            run(&config, &out, emit_spectra.as_deref(), &RunOptions { seed, tol })
        }
    };
    std::process::exit(code);
}
