//! End-to-end exercises of the alignment path: a finite-difference audit
//! of the analytic gradient, and the loss between a cloud and its
//! randomized copy under toy descriptors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{alignment_loss, lgcm_pipeline, toy_descriptor, FeatureCloud, LgcmConfig, LgcmOutput};
use crate::error::Result;
use crate::geometry::PointCloud;
use crate::randomize::{randomize, RandomizationConfig};
use crate::seed::derive_seed;

/// Worst relative error over `instances` random `(n, d)` problems, where
/// an instance's error is `max |analytic − central difference|` divided by
/// `max |central difference|`.
pub fn finite_difference_check(instances: usize, n: usize, d: usize, step: f64, seed: u64) -> Result<f64> {
    let errs: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "fd-check", i as u64));
            let mut rows = || -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect()
            };
            let aux = rows();
            let mut primary = rows();
            let grad = alignment_loss(&aux, &primary, false)?.grad_primary;
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for r in 0..n {
                for c in 0..d {
                    let x = primary[r][c];
                    primary[r][c] = x + step;
                    let hi = alignment_loss(&aux, &primary, false)?.loss;
                    primary[r][c] = x - step;
                    let lo = alignment_loss(&aux, &primary, false)?.loss;
                    primary[r][c] = x;
                    let fd = (hi - lo) / (2.0 * step);
                    err = err.max((fd - grad[r][c]).abs());
                    scale = scale.max(fd.abs());
                }
            }
            Ok(if scale > 0.0 { err / scale } else { err })
        })
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Pipeline run with the toy descriptors of `cloud` as the primary branch
/// and those of its randomized copy as the auxiliary branch.
pub fn randomized_pair_loss(cloud: &PointCloud, aug: &RandomizationConfig, config: &LgcmConfig) -> Result<LgcmOutput> {
    let primary = toy_descriptor(cloud, config.radius, config.k)?;
    randomized_pair_loss_with(&primary, cloud, aug, config)
}

fn randomized_pair_loss_with(
    primary: &FeatureCloud,
    cloud: &PointCloud,
    aug: &RandomizationConfig,
    config: &LgcmConfig,
) -> Result<LgcmOutput> {
    let (copy, _) = randomize(cloud, aug)?;
    let aux = toy_descriptor(&copy, config.radius, config.k)?;
    lgcm_pipeline(primary, &aux, config)
}

/// Mean pair loss per jitter half-width, over randomization seeds
/// `0..seeds` derived from `aug.seed`.
pub fn jitter_trend(
    cloud: &PointCloud,
    aug: &RandomizationConfig,
    config: &LgcmConfig,
    schedule: &[f64],
    seeds: usize,
) -> Result<Vec<f64>> {
    let primary = toy_descriptor(cloud, config.radius, config.k)?;
    schedule
        .iter()
        .map(|&a| {
            let losses: Vec<f64> = (0..seeds)
                .into_par_iter()
                .map(|s| {
                    let cfg = RandomizationConfig {
                        jitter_a: a,
                        seed: derive_seed(aug.seed, "jitter-trend", s as u64),
                        ..*aug
                    };
                    Ok(randomized_pair_loss_with(&primary, cloud, &cfg, config)?.loss)
                })
                .collect::<Result<_>>()?;
            Ok(losses.iter().sum::<f64>() / seeds.max(1) as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_scene, SceneSpec};

    #[test]
    fn gradient_audit_passes() {
        let err = finite_difference_check(10, 16, 32, 1e-6, 3).unwrap();
        assert!(err <= 1e-5, "{err}");
    }

    #[test]
    fn identical_copy_has_zero_loss() {
        let cloud = generate_synthetic_scene(&SceneSpec::default(), 4).frames[0]
            .cloud
            .clone();
        let aug = RandomizationConfig {
            gate_p: 1.0,
            ..Default::default()
        };
        let out = randomized_pair_loss(&cloud, &aug, &LgcmConfig::default()).unwrap();
        assert_eq!(out.loss, 0.0);
    }
}
