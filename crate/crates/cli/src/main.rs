mod commands;
mod error;
mod fsutil;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use log::LevelFilter;

use commands::Context;
use error::{CliError, CliResult};

/// LiDAR weather-robustness toolkit.
///
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
/// STORMBENCH_THREADS caps the worker pool.
#[derive(Parser)]
#[command(name = "stormbench", version, about, long_about = None)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Global seed; recorded in every manifest written.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render synthetic tracking sequences into a dataset.
    Synth(commands::synth::SynthArgs),
    /// Build the weather-corrupted variants of a dataset.
    Corrupt(commands::corrupt::CorruptArgs),
    /// Apply the target-point and sequence-length rules to a dataset.
    Filter(commands::filter::FilterArgs),
    /// Randomize a single point cloud.
    Augment(commands::augment::AugmentArgs),
    /// Run a reference tracker over a dataset and write predictions.
    Track(commands::track::TrackArgs),
    /// Score predictions against ground truth, per weather condition.
    Eval(commands::eval::EvalArgs),
    /// Bin clean-vs-corrupted IoU deviation by distance and corruption.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Self-check of the alignment loss on a synthetic frame.
    LgcmCheck(commands::lgcm_check::LgcmCheckArgs),
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("STORMBENCH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("STORMBENCH_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Check(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    let ctx = Context { seed: cli.seed };
    match cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Corrupt(a) => commands::corrupt::run(&ctx, a),
        Command::Filter(a) => commands::filter::run(&ctx, a),
        Command::Augment(a) => commands::augment::run(&ctx, a),
        Command::Track(a) => commands::track::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::Analyze(a) => commands::analyze::run(&ctx, a),
        Command::LgcmCheck(a) => commands::lgcm_check::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => LevelFilter::Warn,
            1 => LevelFilter::Info,
            _ => LevelFilter::Debug,
        })
        .format_timestamp(None)
        .init();
    match panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
