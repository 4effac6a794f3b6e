//! Experiment runner for the hybridcell engines: validates scenario files,
//! executes sweep files with either engine, and runs the decoupled-vs-coupled
//! cell-edge comparison. All outputs are plain CSV; plotting is out of scope.

mod compare;
mod output;
mod scenario;
mod sweep;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hybridcell",
    version,
    about = "Dual-engine SINR/rate coverage evaluator for hybrid sub-6 GHz / mmWave / THz networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against every schema invariant.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Execute a sweep file against a scenario and write CSV datasets.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        sweep: PathBuf,
        /// Output directory for the CSV files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the sweep file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the sweep file's Monte Carlo trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Decoupled-vs-coupled comparison over a THz bias grid (Monte Carlo).
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Bias grid in dB: `start:step:end` or a comma list.
        #[arg(long, value_name = "SPEC")]
        bias_grid: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50_000)]
        trials: usize,
        /// Also write the raw per-trial records per bias point.
        #[arg(long)]
        dump_trials: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { scenario } => {
            let cfg = scenario::load(&scenario)?;
            let violations = hybridcell::network::validate(&cfg);
            if violations.is_empty() {
                println!("ok: {} is valid", scenario.display());
                return Ok(ExitCode::SUCCESS);
            }
            let mut hard = 0;
            for v in &violations {
                if v.is_warning() {
                    println!("warning: {v}");
                } else {
                    println!("violation: {v}");
                    hard += 1;
                }
            }
            if hard == 0 {
                println!("ok with warnings: {}", scenario.display());
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Run {
            scenario,
            sweep,
            out,
            seed,
            trials,
        } => {
            let cfg = scenario::load_validated(&scenario)?;
            let mut spec = sweep::load(&sweep, &cfg)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(trials) = trials {
                spec.trials = trials;
            }
            let written = sweep::run(&spec, &cfg, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            scenario,
            bias_grid,
            out,
            seed,
            trials,
            dump_trials,
        } => {
            let cfg = scenario::load_validated(&scenario)?;
            let grid = compare::parse_bias_grid(&bias_grid)?;
            let path = compare::run(&cfg, &grid, &out, seed, trials, dump_trials)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
