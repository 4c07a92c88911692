use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gmwdb_cli::{CliError, Selection};

/// Price variable annuities with withdrawal and death guarantees.
#[derive(Debug, Parser)]
#[command(name = "gmwdb", version)]
struct Args {
    /// price, fair-fee, installment, upper-bound, lower-bound, mc-check, or
    /// run (each scenario's own `task` key)
    task: Selection,
    /// Scenario file, or a directory of `.cfg` files
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Scenarios run at once (default: available cores)
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                CliError::usage(e.kind().to_string() + ": " + e.render().to_string().trim()).to_json()
            );
            return ExitCode::from(2);
        }
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match gmwdb_cli::run(args.task, &args.config, &args.out, jobs) {
        Ok(report) => {
            for o in &report.outcomes {
                println!("{}", o.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
