//! `cnls` — certification, simulation and decay analysis for coupled
//! cubic nonlinear Schrödinger systems on the line.
//!
//! Exit codes: 0 success, 1 structural-condition failure, 2
//! configuration error, 3 numerical failure (blowup or wrap-around).

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cnls", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check gauge invariance and certify the dissipativity conditions.
    Check(commands::CheckArgs),
    /// Integrate the system and write trajectory, snapshots and manifest.
    Simulate(commands::SimulateArgs),
    /// Extract profiles from a finished run and fit the decay law.
    Analyze(commands::AnalyzeArgs),
    /// Run check, simulate and analyze with documented defaults.
    Demo(commands::DemoArgs),
}

fn main() -> std::process::ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(args) => commands::check(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Demo(args) => commands::demo(args),
    };
    match outcome {
        Ok(code) => std::process::ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::from(classify_error(&err))
        }
    }
}

/// Blowup and wrap-around are numerical failures (3); everything else
/// that errors out is a configuration problem (2).
fn classify_error(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cnls::Error>() {
        Some(cnls::Error::Blowup { .. }) | Some(cnls::Error::NoWrapViolation { .. }) => 3,
        _ => 2,
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("CNLS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
