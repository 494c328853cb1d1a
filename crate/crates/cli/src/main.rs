mod commands;
mod config;
mod error;
mod ingest;
mod report;

use clap::{Parser, Subcommand};

use commands::{CalibrateArgs, EstimateKArgs, ExportArgs, MonitorArgs, SimulateArgs};

/// Online changepoint monitoring for the factor structure of matrix time series.
#[derive(Parser)]
#[command(name = "eigenwatch", version, about)]
struct Cli {
    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monitor a series for a factor-structure break.
    Monitor(MonitorArgs),
    /// Run a size/delay simulation table.
    Simulate(SimulateArgs),
    /// Calibrate critical values into a cache file.
    Calibrate(CalibrateArgs),
    /// Estimate the factor counts of a stored series.
    EstimateK(EstimateKArgs),
    /// Generate a synthetic series and write it to disk.
    Export(ExportArgs),
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var(config::THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let outcome = match cli.command {
        Command::Monitor(args) => commands::cmd_monitor(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Calibrate(args) => commands::cmd_calibrate(args),
        Command::EstimateK(args) => commands::cmd_estimate_k(args),
        Command::Export(args) => commands::cmd_export(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
