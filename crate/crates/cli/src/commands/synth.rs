use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use stormbench::dataset::manifest::write_dataset;
use stormbench::dataset::Provenance;
use stormbench::{generate_synthetic_scene, SceneSpec, TrackingSequence};

use super::{load_config, thousands, Context};
use crate::error::{CliError, CliResult};
use crate::fsutil::StagedDir;

#[derive(Args)]
pub struct SynthArgs {
    /// Output dataset directory (must not exist, or be empty).
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 1)]
    sequences: usize,

    /// TOML file whose [scene] section describes the scene.
    #[arg(long)]
    scene: Option<PathBuf>,

    #[arg(long, default_value = "synthetic")]
    name: String,
}

/// Sequence `i` is rendered with seed `seed + i`.
pub fn render(spec: &SceneSpec, count: usize, seed: u64) -> Vec<TrackingSequence> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut spec = spec.clone();
            if count > 1 {
                spec.sequence_id = spec.sequence_id.map(|id| format!("{id}-{i}"));
            }
            generate_synthetic_scene(&spec, seed.wrapping_add(i as u64))
        })
        .collect()
}

pub fn run(ctx: &Context, args: SynthArgs) -> CliResult<()> {
    if args.sequences == 0 {
        return Err(CliError::Usage("--sequences must be at least 1".into()));
    }
    let spec = load_config(args.scene.as_deref())?.scene;
    let seqs = render(&spec, args.sequences, ctx.seed());
    let staged = StagedDir::new(&args.out)?;
    let manifest = write_dataset(
        staged.path(),
        &args.name,
        &seqs,
        Provenance::new(ctx.seed(), json!({ "scene": spec, "sequences": args.sequences })),
    )?;
    staged.commit()?;
    println!(
        "wrote {} sequences, {} frames to {}",
        manifest.sequences.len(),
        thousands(manifest.total_frames()),
        args.out.display()
    );
    Ok(())
}
