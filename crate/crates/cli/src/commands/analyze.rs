use std::collections::HashSet;
use std::path::PathBuf;

use clap::Args;

use stormbench::analysis::{encode_analysis_csv, BinnedDeviation};
use stormbench::eval::read_predictions;
use stormbench::{binned_iou_deviation, extract_paired_records, BinAxis, BinSpec, TrackingSequence};

use super::{thousands, Context, Dataset, IouArg};
use crate::error::CliResult;
use crate::fsutil::write_file_atomic;

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    clean_pred: PathBuf,

    #[arg(long)]
    adverse_pred: PathBuf,

    /// Manifest of the clean sequences.
    #[arg(long)]
    clean_gt: PathBuf,

    /// Manifest of the corrupted sequences; may be the same file as --clean-gt.
    #[arg(long)]
    adverse_gt: PathBuf,

    /// `axis=lo:hi:step` or `axis=e0,e1,...`; repeatable. Axes: distance,
    /// template_corruption, target_corruption. Defaults to all three.
    #[arg(long = "bins")]
    bins: Vec<BinSpec>,

    /// Analysis CSV.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "3d")]
    iou: IouArg,
}

fn print_binned(b: &BinnedDeviation) {
    println!("{}", b.axis);
    for s in &b.bins {
        let mean = s.mean_deviation.map_or_else(|| "-".to_string(), |m| format!("{m:.4}"));
        println!("  {:>12} {:>8} {:>10}", format!("{}-{}", s.lo, s.hi), s.count, mean);
    }
    if b.out_of_range > 0 {
        println!("  {} records outside every bin", b.out_of_range);
    }
}

pub fn run(_ctx: &Context, args: AnalyzeArgs) -> CliResult<()> {
    let clean_data = Dataset::open(&args.clean_gt)?;
    let clean = clean_data.sequences()?;
    let same = args.clean_gt == args.adverse_gt;
    let adverse_all = if same {
        clean.clone()
    } else {
        Dataset::open(&args.adverse_gt)?.sequences()?
    };
    // clean copies shipped alongside the variants are not adverse data
    let (copies, adverse): (Vec<TrackingSequence>, Vec<TrackingSequence>) =
        adverse_all.into_iter().partition(|s| s.tag("weather") == Some("clean"));
    let copy_ids: HashSet<&str> = copies.iter().map(|s| s.sequence_id.as_str()).collect();

    let clean_results = read_predictions(&args.clean_pred)?;
    let mut adverse_results = read_predictions(&args.adverse_pred)?;
    adverse_results.retain(|r| !copy_ids.contains(r.sequence_id.as_str()));
    let paired = extract_paired_records(&clean_results, &adverse_results, &clean, &adverse, args.iou.into())?;

    let specs: Vec<BinSpec> = if args.bins.is_empty() {
        BinAxis::ALL.iter().map(|&a| BinSpec::default_for(a)).collect()
    } else {
        args.bins.clone()
    };
    let binned: Vec<BinnedDeviation> = specs.iter().map(|s| binned_iou_deviation(&paired.records, s)).collect();
    write_file_atomic(&args.out, encode_analysis_csv(&binned)?.as_bytes())?;

    println!(
        "{} paired frames; dropped {} (empty template) and {} (empty target)",
        thousands(paired.records.len()),
        thousands(paired.dropped.empty_template),
        thousands(paired.dropped.empty_target)
    );
    for b in &binned {
        print_binned(b);
    }
    Ok(())
}
