use std::path::PathBuf;

use clap::Args;

use stormbench::dataset::manifest::load_ground_truth;
use stormbench::eval::{encode_report_csv, evaluate_conditions, read_predictions, EvaluationSummary};

use super::{Context, Dataset, IouArg};
use crate::error::CliResult;
use crate::fsutil::write_file_atomic;

#[derive(Args)]
pub struct EvalArgs {
    /// Predictions (JSON lines).
    #[arg(long)]
    pred: PathBuf,

    /// Ground-truth dataset manifest.
    #[arg(long)]
    gt: PathBuf,

    /// Report CSV.
    #[arg(long)]
    out: PathBuf,

    /// JSON mirror of the report; defaults to the CSV path with a .json extension.
    #[arg(long)]
    json: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "3d")]
    iou: IouArg,
}

fn print_summary(s: &EvaluationSummary) {
    println!(
        "{:<10} {:>6} {:>9} {:>9} {:>8}",
        "condition", "level", "success", "precision", "frames"
    );
    let row = |c: &str, l: &str, succ: f64, prec: f64, n: usize| {
        println!("{c:<10} {l:>6} {succ:>9.2} {prec:>9.2} {n:>8}");
    };
    row("overall", "-", s.overall.success, s.overall.precision, s.overall.frames);
    if let Some(c) = &s.clean {
        row("clean", "-", c.success, c.precision, c.frames);
    }
    for r in &s.reports {
        for l in &r.levels {
            row(&r.condition, &l.level.to_string(), l.success, l.precision, l.frames);
        }
    }
    for r in &s.reports {
        println!(
            "{}: DR {:.3}/{:.3}  R {:.2}/{:.2}  S.d {:.2}/{:.2}{}",
            r.condition,
            r.dr_success,
            r.dr_precision,
            r.range_success,
            r.range_precision,
            r.sd_success,
            r.sd_precision,
            if r.sd_defined { "" } else { " (single level)" }
        );
    }
}

pub fn run(_ctx: &Context, args: EvalArgs) -> CliResult<()> {
    let data = Dataset::open(&args.gt)?;
    let gt = load_ground_truth(&data.root, &data.manifest)?;
    let results = read_predictions(&args.pred)?;
    let summary = evaluate_conditions(&results, &gt, &data.manifest.sequences, args.iou.into())?;
    let json_path = args.json.clone().unwrap_or_else(|| args.out.with_extension("json"));
    write_file_atomic(&args.out, encode_report_csv(&summary)?.as_bytes())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file_atomic(&json_path, json.as_bytes())?;
    print_summary(&summary);
    Ok(())
}
