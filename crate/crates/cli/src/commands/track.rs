use std::path::PathBuf;

use clap::Args;

use stormbench::eval::{encode_predictions, DEFAULT_SEARCH_MARGIN};
use stormbench::{run_reference_tracker, TrackerKind};

use super::{thousands, Context, Dataset};
use crate::error::{CliError, CliResult};
use crate::fsutil::write_file_atomic;

#[derive(Args)]
pub struct TrackArgs {
    /// Dataset manifest; frame 0 of every sequence must be labelled.
    #[arg(long)]
    gt: PathBuf,

    /// Predictions (JSON lines).
    #[arg(long)]
    out: PathBuf,

    /// constant-position or centroid-shift.
    #[arg(long, default_value = "centroid-shift")]
    tracker: TrackerKind,

    /// Search-region growth around the previous box, metres.
    #[arg(long, default_value_t = DEFAULT_SEARCH_MARGIN)]
    margin: f64,
}

pub fn run(_ctx: &Context, args: TrackArgs) -> CliResult<()> {
    if !(args.margin >= 0.0 && args.margin.is_finite()) {
        return Err(CliError::Usage(format!(
            "--margin must be non-negative, got {}",
            args.margin
        )));
    }
    let data = Dataset::open(&args.gt)?;
    let seqs = data.sequences()?;
    let run = run_reference_tracker(args.tracker, &seqs, args.margin)?;
    write_file_atomic(&args.out, encode_predictions(&run.results).as_bytes())?;
    let frames: usize = run.results.iter().map(|r| r.boxes.len()).sum();
    println!(
        "{}: {} sequences, {} predicted frames, {} empty search regions",
        args.tracker,
        thousands(run.results.len()),
        thousands(frames),
        thousands(run.fallbacks)
    );
    Ok(())
}
