use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pxqama_cli::{run, Command, Invocation};

/// Two-user parallax H-QAM downlink: constellations, precoders, LLRs,
/// bit-channel rates and rate regions.
#[derive(Parser)]
#[command(name = "pxqama", version)]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// External baseline curves as CSV with columns label,R1,R2
    #[arg(long, global = true)]
    overlay: Option<PathBuf>,

    /// Worker threads for sweeps
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Component and composite constellation points with Gray labels
    Map,
    /// Precoding vectors, equivalent gains and composite distances
    Precode,
    /// Simulated received samples with per-bit metrics and LLRs
    Llr,
    /// Per-bit mutual information and user rates of the configured mode
    Rates,
    /// Full mode sweep, convex hull and mode reduction
    Region,
    /// Reduced mode table from a region CSV
    Modes {
        /// Number of modes to keep, including both single-user anchors
        #[arg(long)]
        n2: Option<usize>,
        /// Region CSV (defaults to region.csv in the output directory)
        #[arg(long)]
        region: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.cmd {
        Cmd::Map => Command::Map,
        Cmd::Precode => Command::Precode,
        Cmd::Llr => Command::Llr,
        Cmd::Rates => Command::Rates,
        Cmd::Region => Command::Region,
        Cmd::Modes { n2, region } => Command::Modes { n2, region },
    };
    let inv = Invocation {
        command,
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        overlay: cli.overlay,
        workers: cli.workers,
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pxqama: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
