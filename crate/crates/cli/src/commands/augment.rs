use std::path::PathBuf;

use clap::Args;

use stormbench::dataset::io::{encode_cloud, read_cloud_bin};
use stormbench::randomize;

use super::{load_config, Context};
use crate::error::CliResult;
use crate::fsutil::write_file_atomic;

#[derive(Args)]
pub struct AugmentArgs {
    /// Input cloud (.bin, 4 × f32 per point).
    #[arg(long = "in")]
    input: PathBuf,

    #[arg(long)]
    out: PathBuf,

    /// TOML file whose [randomization] section configures the draw.
    #[arg(long)]
    aug_config: Option<PathBuf>,

    /// Also write the full trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: AugmentArgs) -> CliResult<()> {
    let mut cfg = load_config(args.aug_config.as_deref())?.randomization;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let cloud = read_cloud_bin(&args.input)?;
    let (out, trace) = randomize(&cloud, &cfg)?;
    write_file_atomic(&args.out, &encode_cloud(&out))?;
    if let Some(p) = &args.trace {
        let text = serde_json::to_string_pretty(&trace).expect("trace serializes");
        write_file_atomic(p, text.as_bytes())?;
    }

    println!("seed {}: {} -> {} points", cfg.seed, cloud.len(), out.len());
    if trace.pass_through {
        println!("pass-through");
        return Ok(());
    }
    let on = |b: bool| if b { "fired" } else { "skipped" };
    println!(
        "noise    {:<7} +{} (n_max {})",
        on(trace.noise_fired),
        trace.noise_points.len(),
        trace.n_max
    );
    println!(
        "dropout  {:<7} -{} (r_max {}{})",
        on(trace.dropout_fired),
        trace.dropped.len(),
        trace.r_max,
        if trace.dropout_clamped { ", clamped" } else { "" }
    );
    println!("jitter   {:<7} a = {}", on(trace.jitter_fired), cfg.jitter_a);
    Ok(())
}
