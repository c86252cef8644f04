use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use stormbench::dataset::filter::{summarize, DEFAULT_MIN_LEN, DEFAULT_MIN_POINTS};
use stormbench::dataset::manifest::write_dataset;
use stormbench::dataset::Provenance;
use stormbench::filter_real_sequences;

use super::{thousands, Context, Dataset};
use crate::error::CliResult;
use crate::fsutil::StagedDir;

#[derive(Args)]
pub struct FilterArgs {
    /// Input manifest.
    #[arg(long = "in")]
    input: PathBuf,

    /// Output dataset directory (must not exist, or be empty).
    #[arg(long)]
    out: PathBuf,

    /// Frames with fewer target points are dropped.
    #[arg(long, default_value_t = DEFAULT_MIN_POINTS)]
    min_points: usize,

    /// Runs of fewer frames are discarded.
    #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
    min_len: usize,
}

pub fn run(ctx: &Context, args: FilterArgs) -> CliResult<()> {
    let input = Dataset::open(&args.input)?;
    let raw = input.sequences()?;
    let kept = filter_real_sequences(&raw, args.min_points, args.min_len);
    let s = summarize(&raw, &kept);
    let staged = StagedDir::new(&args.out)?;
    write_dataset(
        staged.path(),
        &format!("{}-filtered", input.manifest.name),
        &kept,
        Provenance::new(
            ctx.seed(),
            json!({ "source": input.manifest.name, "min_points": args.min_points, "min_len": args.min_len }),
        ),
    )?;
    staged.commit()?;
    println!(
        "input: {} sequences, {} frames",
        thousands(s.input_sequences),
        thousands(s.input_frames)
    );
    println!(
        "kept {} intact, {} split outputs, dropped {}",
        thousands(s.kept_intact),
        thousands(s.split_outputs),
        thousands(s.dropped_sequences)
    );
    println!(
        "output: {} sequences, {} frames in {}",
        thousands(s.output_sequences),
        thousands(s.output_frames),
        args.out.display()
    );
    Ok(())
}
