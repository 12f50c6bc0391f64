//! Command-line front-end for the framelab toolkit.
//!
//! Exit codes: 0 success, 2 validation error, 3 parse error, 4 I/O error.

mod commands;
mod config;
mod errors;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "framelab",
    version,
    about = "Frame-level evaluation sets, d'/lwlrap scoring, and label-set analysis for audio event corpora",
    after_help = "Config file keys (see --config): frame_dur, fill_fraction, \
                  duration_fraction, clamp_epsilon, pooling, music_id."
)]
struct Cli {
    /// Seed for all randomized operations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Key-value config file overriding built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Omit generated_at_unix fields from outputs (for byte-exact
    /// comparison between runs).
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate label files and write a normalized corpus store plus a
    /// stats sidecar.
    Ingest(commands::ingest::IngestArgs),
    /// Project a store's strong labels onto the frame grid
    /// (POS / COMP_NEG / EXP_NEG rows).
    Frame(commands::frame::FrameArgs),
    /// Evaluate a score file: per-class AUC/d', macro d', and lwlrap.
    Eval(commands::eval::EvalArgs),
    /// Priors scatter and top-K odds-ratio tables across two stores.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Build the aligned weak / strong / diffuse subsets over the shared
    /// clips of two stores.
    BuildSubsets(commands::subsets::SubsetsArgs),
    /// Draw a Bernoulli(mu) mixture manifest of weak and strong-like rows
    /// with fresh random crops.
    MixManifest(commands::mix::MixArgs),
}

fn run(cli: &Cli) -> CliResult<()> {
    let config = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest(args) => commands::ingest::run(args, &config, &cli.out, cli.no_timestamp),
        Command::Frame(args) => commands::frame::run(args, &config, &cli.out, cli.no_timestamp),
        Command::Eval(args) => commands::eval::run(args, &config, &cli.out, cli.no_timestamp),
        Command::Analyze(args) => commands::analyze::run(args, &config, &cli.out, cli.no_timestamp),
        Command::BuildSubsets(args) => {
            commands::subsets::run(args, &config, &cli.out, cli.no_timestamp)
        }
        Command::MixManifest(args) => {
            commands::mix::run(args, &config, &cli.out, cli.seed, cli.no_timestamp)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("framelab: {e}");
            ExitCode::from(e.code)
        }
    }
}
