//! Command-line front end: `run`, `sweep`, `plan` and `verify`.

pub mod config;
pub mod output;
mod run;
mod sweep;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Plan, Resolved};
pub use run::{plan, run_experiment, run_seeds, MeanCurve, RunSummary, SeedSummary};
pub use sweep::{floats_to_target, sweep, Axis, SweepPoint, SweepSummary};
pub use verify::{same_iterates, verify, Check, Status, Suite};

use crate::error::Error;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MARINA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "marina", version, about = "Simulate communication-compressed distributed optimizers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every seed of a config and write traces plus a summary.
    Run { config: PathBuf },
    /// Run a config once per value of an axis listed in `[sweep] values`.
    Sweep {
        config: PathBuf,
        /// compressor.k, p, gamma or seed-count
        #[arg(long)]
        axis: Axis,
    },
    /// Print the resolved stepsize, probability, batch size and bound as JSON.
    Plan { config: PathBuf },
    /// Run a built-in check suite: compressors, identities or bounds.
    Verify {
        suite: Suite,
        /// Multiplies the theoretical stepsize in the bounds suite.
        #[arg(long, default_value_t = 1.0)]
        gamma_scale: f64,
    },
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DIVERGED: i32 = 3;
    pub const OTHER: i32 = 4;
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Parse { .. } => exit::CONFIG,
        Error::Diverged { .. } => exit::DIVERGED,
        _ => exit::OTHER,
    }
}

/// Executes a parsed command, printing results to stdout and diagnostics to
/// stderr, and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config } => run_experiment(&config).map(|s| {
            println!(
                "completed {} seed(s); bound {:.6e}; mean final grad_sq_norm {:.6e}",
                s.seeds.len(),
                s.bound,
                s.mean_curve.grad_sq_norm.last().copied().unwrap_or(f64::NAN)
            );
            exit::OK
        }),
        Command::Sweep { config, axis } => sweep(&config, axis).map(|s| {
            for p in &s.points {
                println!(
                    "{}={}: reached {}/{}; mean floats to target {}",
                    axis.name(),
                    p.value,
                    p.reached,
                    p.seeds.len(),
                    p.mean_floats_to_target.map_or("-".to_string(), |v| format!("{v:.1}"))
                );
            }
            exit::OK
        }),
        Command::Plan { config } => plan(&config).map(|p| {
            println!("{}", serde_json::to_string_pretty(&p).expect("plan serialises"));
            exit::OK
        }),
        Command::Verify { suite, gamma_scale } => verify(suite, gamma_scale).map(|checks| {
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| c.status == Status::Fail) {
                exit::CHECK_FAILED
            } else {
                exit::OK
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
