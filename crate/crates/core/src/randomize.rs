//! Domain randomization of a point cloud: Gaussian noise injection,
//! point dropout and uniform jitter, composed as
//! `(P ∪ noise ∖ dropped) + jitter`.
//!
//! With probability `gate_p` the cloud passes through untouched.
//! Otherwise three independent coins, each firing with probability
//! `branch_p`, enable the three branches. Injected noise points are
//! jittered too; dropout only ever removes original points.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::seed::{derive_seed, stream_rng};

/// A point budget: absolute, or a fraction of the input cloud size
/// (at least one point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Count(usize),
    Fraction(f64),
}

impl Budget {
    pub fn resolve(&self, cloud_len: usize) -> usize {
        match *self {
            Budget::Count(n) => n,
            Budget::Fraction(f) => ((f * cloud_len as f64).floor() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationConfig {
    /// Upper bound on injected noise points; `n` is drawn from `1..=n_max`.
    pub n_max: Budget,
    /// Std of the Gaussian offset of each noise point from its anchor, meters.
    pub noise_sigma: f64,
    /// Jitter offsets are drawn from `U(-jitter_a, jitter_a)` per coordinate.
    pub jitter_a: f64,
    /// Upper bound on dropped points; `r` is drawn from `1..=r_max`.
    pub r_max: Budget,
    pub gate_p: f64,
    pub branch_p: f64,
    pub seed: u64,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        RandomizationConfig {
            n_max: Budget::Fraction(0.2),
            noise_sigma: 0.1,
            jitter_a: 0.05,
            r_max: Budget::Fraction(0.3),
            gate_p: 0.5,
            branch_p: 0.5,
            seed: 0,
        }
    }
}

impl RandomizationConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::InvalidConfig(m));
        for (name, b) in [("n_max", self.n_max), ("r_max", self.r_max)] {
            match b {
                Budget::Count(0) => return err(format!("{name} must be at least 1")),
                Budget::Fraction(f) if !(f > 0.0 && f.is_finite()) => {
                    return err(format!("{name} fraction must be positive, got {f}"))
                }
                _ => {}
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return err(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if !(self.jitter_a >= 0.0 && self.jitter_a.is_finite()) {
            return err(format!("jitter_a must be non-negative, got {}", self.jitter_a));
        }
        for (name, p) in [("gate_p", self.gate_p), ("branch_p", self.branch_p)] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

/// What one call to [`randomize`] did.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentationTrace {
    pub pass_through: bool,
    pub noise_fired: bool,
    pub dropout_fired: bool,
    pub jitter_fired: bool,
    pub n_max: usize,
    pub r_max: usize,
    /// Injected noise points before jitter.
    pub noise_points: Vec<Point3>,
    /// Indices of removed input points, ascending.
    pub dropped: Vec<usize>,
    /// The drawn dropout count was reduced to keep at least one point.
    pub dropout_clamped: bool,
}

pub fn randomize(cloud: &PointCloud, config: &RandomizationConfig) -> Result<(PointCloud, AugmentationTrace)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    config.validate()?;
    let n_pts = cloud.len();
    let mut trace = AugmentationTrace {
        n_max: config.n_max.resolve(n_pts),
        r_max: config.r_max.resolve(n_pts),
        ..Default::default()
    };
    let mut coins = stream_rng(config.seed, 0);
    if coins.random::<f64>() < config.gate_p {
        trace.pass_through = true;
        return Ok((cloud.clone(), trace));
    }
    trace.noise_fired = coins.random::<f64>() < config.branch_p;
    trace.dropout_fired = coins.random::<f64>() < config.branch_p;
    trace.jitter_fired = coins.random::<f64>() < config.branch_p;

    if trace.noise_fired {
        let mut rng = stream_rng(config.seed, 1);
        let n = rng.random_range(1..=trace.n_max);
        let normal = Normal::new(0.0, config.noise_sigma).expect("sigma validated");
        trace.noise_points = (0..n)
            .map(|_| {
                let anchor = cloud.points[rng.random_range(0..n_pts)];
                Point3 {
                    x: anchor.x + normal.sample(&mut rng),
                    y: anchor.y + normal.sample(&mut rng),
                    z: anchor.z + normal.sample(&mut rng),
                    ..anchor
                }
            })
            .collect();
    }

    if trace.dropout_fired {
        let mut rng = stream_rng(config.seed, 2);
        let drawn = rng.random_range(1..=trace.r_max);
        let r = drawn.min(n_pts - 1);
        trace.dropout_clamped = r < drawn;
        let mut dropped = index::sample(&mut rng, n_pts, r).into_vec();
        dropped.sort_unstable();
        trace.dropped = dropped;
    }

    let mut keep = vec![true; n_pts];
    for &i in &trace.dropped {
        keep[i] = false;
    }
    let mut points: Vec<Point3> = cloud
        .points
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .chain(trace.noise_points.iter().copied())
        .collect();

    if trace.jitter_fired && config.jitter_a > 0.0 {
        let mut rng = stream_rng(config.seed, 3);
        let a = config.jitter_a;
        let u = Uniform::new_inclusive(-a, a).expect("jitter_a validated");
        for p in &mut points {
            p.x += u.sample(&mut rng);
            p.y += u.sample(&mut rng);
            p.z += u.sample(&mut rng);
        }
    }

    Ok((
        PointCloud {
            points,
            frame_index: cloud.frame_index,
            sensor_origin: cloud.sensor_origin,
        },
        trace,
    ))
}

/// Randomizes a batch; item `i` uses the seed derived from
/// `(global_seed, stream_id, i)`, so results do not depend on scheduling.
pub fn randomize_batch(
    clouds: &[PointCloud],
    config: &RandomizationConfig,
    global_seed: u64,
    stream_id: &str,
) -> Result<Vec<(PointCloud, AugmentationTrace)>> {
    clouds
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let cfg = RandomizationConfig {
                seed: derive_seed(global_seed, stream_id, i as u64),
                ..*config
            };
            randomize(c, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-1.0..1.0),
                        rng.random(),
                    )
                })
                .collect(),
        )
    }

    fn seed_where(pred: impl Fn(&AugmentationTrace) -> bool, c: &PointCloud, base: RandomizationConfig) -> u64 {
        (0..10_000)
            .find(|&s| pred(&randomize(c, &RandomizationConfig { seed: s, ..base }).unwrap().1))
            .expect("some seed satisfies the predicate")
    }

    #[test]
    fn gate_pass_through_returns_input() {
        let c = cloud(50, 1);
        let cfg = RandomizationConfig {
            gate_p: 1.0,
            ..Default::default()
        };
        let (out, trace) = randomize(&c, &cfg).unwrap();
        assert!(trace.pass_through);
        assert_eq!(out, c);
    }

    #[test]
    fn all_branches_off_returns_input() {
        let c = cloud(50, 1);
        let base = RandomizationConfig::default();
        let s = seed_where(
            |t| !t.pass_through && !t.noise_fired && !t.dropout_fired && !t.jitter_fired,
            &c,
            base,
        );
        let (out, trace) = randomize(&c, &RandomizationConfig { seed: s, ..base }).unwrap();
        assert!(!trace.pass_through);
        assert_eq!(out, c);
        let cfg = RandomizationConfig {
            gate_p: 0.0,
            branch_p: 0.0,
            ..Default::default()
        };
        assert_eq!(randomize(&c, &cfg).unwrap().0, c);
    }

    #[test]
    fn without_jitter_output_is_input_or_noise() {
        let c = cloud(80, 2);
        let cfg = RandomizationConfig {
            gate_p: 0.0,
            branch_p: 1.0,
            jitter_a: 0.0,
            ..Default::default()
        };
        for seed in 0..50 {
            let (out, trace) = randomize(&c, &RandomizationConfig { seed, ..cfg }).unwrap();
            for p in &out.points {
                assert!(c.points.contains(p) || trace.noise_points.contains(p));
            }
            assert_eq!(out.len(), c.len() - trace.dropped.len() + trace.noise_points.len());
        }
    }

    #[test]
    fn dropout_never_empties_the_cloud() {
        let c = cloud(3, 4);
        let cfg = RandomizationConfig {
            gate_p: 0.0,
            branch_p: 1.0,
            r_max: Budget::Count(50),
            ..Default::default()
        };
        let mut clamped = false;
        for seed in 0..200 {
            let (out, trace) = randomize(&c, &RandomizationConfig { seed, ..cfg }).unwrap();
            assert!(trace.dropped.len() <= 2);
            assert!(out.len() > trace.noise_points.len());
            clamped |= trace.dropout_clamped;
        }
        assert!(clamped);
    }

    #[test]
    fn singleton_cloud_survives() {
        let c = cloud(1, 5);
        let cfg = RandomizationConfig {
            gate_p: 0.0,
            branch_p: 1.0,
            ..Default::default()
        };
        let (out, trace) = randomize(&c, &cfg).unwrap();
        assert!(trace.dropped.is_empty());
        assert!(!out.is_empty());
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            randomize(&PointCloud::default(), &Default::default()),
            Err(Error::EmptyCloud)
        ));
        let c = cloud(5, 1);
        for bad in [
            RandomizationConfig {
                n_max: Budget::Count(0),
                ..Default::default()
            },
            RandomizationConfig {
                jitter_a: -0.1,
                ..Default::default()
            },
            RandomizationConfig {
                gate_p: 1.5,
                ..Default::default()
            },
            RandomizationConfig {
                branch_p: -0.1,
                ..Default::default()
            },
        ] {
            assert!(matches!(randomize(&c, &bad), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn budgets_scale_with_cloud_size() {
        assert_eq!(Budget::Fraction(0.2).resolve(100), 20);
        assert_eq!(Budget::Fraction(0.2).resolve(3), 1);
        assert_eq!(Budget::Count(7).resolve(3), 7);
        let cfg: RandomizationConfig = toml::from_str("n_max = 12\nr_max = 0.25\njitter_a = 0.02").unwrap();
        assert_eq!(cfg.n_max, Budget::Count(12));
        assert_eq!(cfg.r_max, Budget::Fraction(0.25));
    }

    #[test]
    fn batch_items_match_single_calls() {
        let clouds: Vec<_> = (0..6).map(|i| cloud(40, i)).collect();
        let cfg = RandomizationConfig::default();
        let fwd = randomize_batch(&clouds, &cfg, 9, "b").unwrap();
        assert_eq!(fwd, randomize_batch(&clouds, &cfg, 9, "b").unwrap());
        for (i, (out, _)) in fwd.iter().enumerate() {
            let seed = derive_seed(9, "b", i as u64);
            assert_eq!(
                *out,
                randomize(&clouds[i], &RandomizationConfig { seed, ..cfg }).unwrap().0
            );
        }
    }

    proptest! {
        #[test]
        fn size_and_jitter_bounds(seed in any::<u64>(), n in 1usize..120, a in 0.0f64..0.3) {
            let c = cloud(n, seed ^ 1);
            let cfg = RandomizationConfig { seed, jitter_a: a, ..Default::default() };
            let (out, trace) = randomize(&c, &cfg).unwrap();
            prop_assert!(out.len() <= n + trace.n_max);
            prop_assert!(out.len() >= 1.max(n.saturating_sub(trace.r_max)));
            // kept originals come first, in order, then noise points
            let sources: Vec<Point3> = c
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| trace.dropped.binary_search(i).is_err())
                .map(|(_, p)| *p)
                .chain(trace.noise_points.iter().copied())
                .collect();
            prop_assert_eq!(sources.len(), out.len());
            for (p, q) in out.points.iter().zip(&sources) {
                prop_assert!((p.x - q.x).abs() <= a + 1e-12);
                prop_assert!((p.y - q.y).abs() <= a + 1e-12);
                prop_assert!((p.z - q.z).abs() <= a + 1e-12);
                prop_assert_eq!(p.intensity, q.intensity);
            }
        }
    }
}
