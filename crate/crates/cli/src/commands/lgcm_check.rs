use std::path::PathBuf;

use clap::Args;

use stormbench::lgcm::{finite_difference_check, jitter_trend, randomized_pair_loss};
use stormbench::{generate_synthetic_scene, lgcm_pipeline, toy_descriptor};

use super::{load_config, Context};
use crate::error::{CliError, CliResult};

const GRAD_TOL: f64 = 1e-5;

#[derive(Args)]
pub struct LgcmCheckArgs {
    /// TOML file whose [scene] section describes the scene.
    #[arg(long)]
    scene: Option<PathBuf>,

    /// TOML file whose [randomization] section configures the copy.
    #[arg(long)]
    aug_config: Option<PathBuf>,

    /// TOML file whose [lgcm] section configures the alignment.
    #[arg(long)]
    lgcm_config: Option<PathBuf>,

    /// Jitter half-widths for the trend, in the order they are checked.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.01])]
    jitter: Vec<f64>,

    /// Randomization seeds averaged per jitter value.
    #[arg(long, default_value_t = 50)]
    trend_seeds: usize,

    /// Random (16 × 32) instances in the gradient check.
    #[arg(long, default_value_t = 100)]
    grad_instances: usize,
}

pub fn run(ctx: &Context, args: LgcmCheckArgs) -> CliResult<()> {
    let spec = load_config(args.scene.as_deref())?.scene;
    let mut aug = load_config(args.aug_config.as_deref())?.randomization;
    let lgcm = load_config(args.lgcm_config.as_deref())?.lgcm;
    if args.trend_seeds == 0 {
        return Err(CliError::Usage("--trend-seeds must be at least 1".into()));
    }
    if let Some(&bad) = args.jitter.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(CliError::Usage(format!(
            "jitter values must be non-negative, got {bad}"
        )));
    }
    aug.seed = ctx.seed();
    let cloud = generate_synthetic_scene(&spec, ctx.seed()).frames[0].cloud.clone();
    println!("scene frame 0: {} points", cloud.len());
    let mut failures = Vec::new();

    let desc = toy_descriptor(&cloud, lgcm.radius, lgcm.k)?;
    let same = lgcm_pipeline(&desc, &desc, &lgcm)?;
    let ok = same.loss == 0.0;
    println!(
        "identical copy: loss {} {}",
        same.loss,
        if ok { "PASS" } else { "FAIL" }
    );
    if !ok {
        failures.push("identical copy");
    }

    let out = randomized_pair_loss(&cloud, &aug, &lgcm)?;
    let d = out.diagnostics;
    println!(
        "randomized copy: loss {:.6}, keys {} used {} skipped {}",
        out.loss, d.keys, d.used, d.skipped
    );

    if args.grad_instances > 0 {
        let err = finite_difference_check(args.grad_instances, 16, 32, 1e-6, ctx.seed())?;
        let ok = err <= GRAD_TOL;
        println!(
            "gradient check {} (max rel err {err:.2e} {} 1e-5, {} instances)",
            if ok { "PASS" } else { "FAIL" },
            if ok { "≤" } else { ">" },
            args.grad_instances
        );
        if !ok {
            failures.push("gradient check");
        }
    }

    if !args.jitter.is_empty() {
        let losses = jitter_trend(&cloud, &aug, &lgcm, &args.jitter, args.trend_seeds)?;
        for (a, l) in args.jitter.iter().zip(&losses) {
            println!("jitter {a:<6} mean loss {l:.6}");
        }
        let ok = losses.windows(2).all(|w| w[1] < w[0]);
        println!(
            "trend over {} seeds: {}",
            args.trend_seeds,
            if ok {
                "strictly decreasing PASS"
            } else {
                "not strictly decreasing FAIL"
            }
        );
        if !ok {
            failures.push("jitter trend");
        }
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("failed: {}", failures.join(", "))))
    }
}
