//! Local geometric contrastive alignment between a primary branch and an
//! auxiliary (randomized) branch.
//!
//! Key points are sampled from the auxiliary cloud. At each key, both
//! branches max-pool the features of their own ball-query neighbors, and
//! the pooled pairs are pulled together by the mean L2 residual.

mod check;
mod descriptor;
mod loss;
mod sampling;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use check::{finite_difference_check, jitter_trend, randomized_pair_loss};
pub use descriptor::{symmetric_eigenvalues, toy_descriptor, TOY_DIM};
pub use loss::{alignment_loss, Alignment, DELTA_SMOOTH};
pub use sampling::{aggregate_local_feature, ball_query, farthest_point_sample};

use crate::error::{Error, Result};
use crate::geometry::KdTree;
use sampling::{ball_query_indexed, max_pool};

/// Downsampled points with one feature row of width `dim` per point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCloud {
    points: Vec<[f64; 3]>,
    features: Vec<f64>,
    dim: usize,
}

impl FeatureCloud {
    /// `features` is row-major, `points.len() × dim`.
    pub fn new(points: Vec<[f64; 3]>, features: Vec<f64>, dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if features.len() != points.len() * dim {
            return Err(Error::LengthMismatch(format!(
                "{} points need {} feature values, got {}",
                points.len(),
                points.len() * dim,
                features.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidPoint(format!("point {i} has a non-finite coordinate")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "point {} has a non-finite feature",
                i / dim
            )));
        }
        Ok(FeatureCloud { points, features, dim })
    }

    pub fn from_rows(points: Vec<[f64; 3]>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        FeatureCloud::new(points, rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> FeatureCloud {
        FeatureCloud {
            points: order.iter().map(|&i| self.points[i]).collect(),
            features: order.iter().flat_map(|&i| self.feature(i).iter().copied()).collect(),
            dim: self.dim,
        }
    }

    /// Row order sorted lexicographically by coordinates, then features.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let lex = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        };
        order.sort_by(|&i, &j| {
            lex(&self.points[i], &self.points[j])
                .then_with(|| lex(self.feature(i), self.feature(j)))
                .then(i.cmp(&j))
        });
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LgcmConfig {
    /// Number of key points sampled from the auxiliary cloud; capped at its size.
    pub m: usize,
    pub radius: f64,
    pub k: usize,
    /// Zero the auxiliary-side gradient.
    pub stop_aux: bool,
}

impl Default for LgcmConfig {
    fn default() -> Self {
        LgcmConfig {
            m: 128,
            radius: 0.3,
            k: 16,
            stop_aux: false,
        }
    }
}

impl LgcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::InvalidConfig(format!(
                "m and k must be at least 1, got {} and {}",
                self.m, self.k
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LgcmDiagnostics {
    pub keys: usize,
    /// Keys whose ball was empty in either branch.
    pub skipped: usize,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LgcmOutput {
    pub loss: f64,
    /// Per-point gradient, row-major like [`FeatureCloud::features`], in
    /// the caller's point order.
    pub grad_primary: Vec<f64>,
    pub grad_aux: Vec<f64>,
    pub keys: Vec<[f64; 3]>,
    pub diagnostics: LgcmDiagnostics,
}

/// Pooled pair for one surviving key.
struct KeyPair {
    aux: Vec<f64>,
    aux_src: Vec<usize>,
    primary: Vec<f64>,
    primary_src: Vec<usize>,
}

/// Runs both clouds through key sampling, pooling and alignment.
///
/// Inputs are first put in canonical row order, so the loss does not
/// depend on how either cloud is ordered; gradients are reported back in
/// the original order.
pub fn lgcm_pipeline(primary: &FeatureCloud, aux: &FeatureCloud, config: &LgcmConfig) -> Result<LgcmOutput> {
    config.validate()?;
    if primary.dim() != aux.dim() {
        return Err(Error::DimensionMismatch {
            expected: aux.dim(),
            found: primary.dim(),
        });
    }
    let p_order = primary.canonical_order();
    let a_order = aux.canonical_order();
    let p = primary.permuted(&p_order);
    let a = aux.permuted(&a_order);

    let key_idx = farthest_point_sample(a.points(), config.m.min(a.len()))?;
    let p_tree = KdTree::new(p.points());
    let a_tree = KdTree::new(a.points());
    let pooled: Vec<Option<KeyPair>> = key_idx
        .par_iter()
        .map(|&ki| {
            let key = a.points()[ki];
            let (aux, aux_src) = max_pool(&a, &ball_query_indexed(&a_tree, key, config.radius, config.k))?;
            let (primary, primary_src) = max_pool(&p, &ball_query_indexed(&p_tree, key, config.radius, config.k))?;
            Some(KeyPair {
                aux,
                aux_src,
                primary,
                primary_src,
            })
        })
        .collect();
    let pairs: Vec<KeyPair> = pooled.into_iter().flatten().collect();
    let diagnostics = LgcmDiagnostics {
        keys: key_idx.len(),
        skipped: key_idx.len() - pairs.len(),
        used: pairs.len(),
    };
    if pairs.is_empty() {
        return Err(Error::NoSurvivingKeys);
    }

    let aux_vecs: Vec<Vec<f64>> = pairs.iter().map(|kp| kp.aux.clone()).collect();
    let prim_vecs: Vec<Vec<f64>> = pairs.iter().map(|kp| kp.primary.clone()).collect();
    let align = alignment_loss(&aux_vecs, &prim_vecs, config.stop_aux)?;

    let dim = p.dim();
    let mut grad_primary = vec![0.0; primary.len() * dim];
    let mut grad_aux = vec![0.0; aux.len() * dim];
    for (i, kp) in pairs.iter().enumerate() {
        for d in 0..dim {
            grad_primary[p_order[kp.primary_src[d]] * dim + d] += align.grad_primary[i][d];
            grad_aux[a_order[kp.aux_src[d]] * dim + d] += align.grad_aux[i][d];
        }
    }
    Ok(LgcmOutput {
        loss: align.loss,
        grad_primary,
        grad_aux,
        keys: key_idx.iter().map(|&i| a.points()[i]).collect(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_cloud(n: usize, dim: usize, seed: u64) -> FeatureCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.3..0.3),
                ]
            })
            .collect();
        let feats = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        FeatureCloud::new(pts, feats, dim).unwrap()
    }

    #[test]
    fn identical_branches_give_zero_loss() {
        let c = random_cloud(200, 6, 1);
        let out = lgcm_pipeline(&c, &c, &LgcmConfig::default()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.diagnostics.skipped, 0);
        assert_eq!(out.diagnostics.keys, 128);
    }

    #[test]
    fn doubled_primary_features_leave_aux_norms() {
        let aux = random_cloud(150, 4, 2);
        let primary = FeatureCloud::new(
            aux.points().to_vec(),
            aux.features().iter().map(|v| 2.0 * v).collect(),
            4,
        )
        .unwrap();
        let cfg = LgcmConfig::default();
        let out = lgcm_pipeline(&primary, &aux, &cfg).unwrap();
        let expected: f64 = out
            .keys
            .iter()
            .map(|&k| {
                aggregate_local_feature(k, &aux, cfg.radius, cfg.k)
                    .0
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / out.keys.len() as f64;
        assert!((out.loss - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn empty_balls_are_skipped_and_counted() {
        let aux = random_cloud(50, 3, 3);
        let far: Vec<[f64; 3]> = aux.points().iter().map(|p| [p[0] + 100.0, p[1], p[2]]).collect();
        let primary = FeatureCloud::new(far, aux.features().to_vec(), 3).unwrap();
        assert!(matches!(
            lgcm_pipeline(&primary, &aux, &LgcmConfig::default()),
            Err(Error::NoSurvivingKeys)
        ));

        let mut pts = aux.points().to_vec();
        for p in pts.iter_mut().take(25) {
            p[0] += 100.0;
        }
        let half = FeatureCloud::new(pts, aux.features().to_vec(), 3).unwrap();
        let out = lgcm_pipeline(
            &half,
            &aux,
            &LgcmConfig {
                radius: 0.05,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.diagnostics.keys, 50);
        assert!(out.diagnostics.skipped > 0);
        assert_eq!(out.diagnostics.used + out.diagnostics.skipped, 50);
    }

    #[test]
    fn stop_aux_zeroes_aux_gradient() {
        let a = random_cloud(100, 5, 4);
        let p = random_cloud(100, 5, 5);
        let both = lgcm_pipeline(
            &p,
            &a,
            &LgcmConfig {
                radius: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let stop = lgcm_pipeline(
            &p,
            &a,
            &LgcmConfig {
                radius: 0.5,
                stop_aux: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(both.grad_primary, stop.grad_primary);
        assert!(stop.grad_aux.iter().all(|&g| g == 0.0));
        let sum_p: f64 = both.grad_primary.iter().sum();
        let sum_a: f64 = both.grad_aux.iter().sum();
        assert!((sum_p + sum_a).abs() < 1e-12);
    }

    #[test]
    fn pipeline_gradient_matches_finite_differences() {
        let a = random_cloud(60, 3, 6);
        let p = random_cloud(60, 3, 7);
        let cfg = LgcmConfig {
            m: 20,
            radius: 0.6,
            k: 8,
            stop_aux: false,
        };
        let out = lgcm_pipeline(&p, &a, &cfg).unwrap();
        let h = 1e-7;
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for idx in 0..p.features().len() {
            let shifted = |delta: f64| {
                let mut f = p.features().to_vec();
                f[idx] += delta;
                let q = FeatureCloud::new(p.points().to_vec(), f, 3).unwrap();
                lgcm_pipeline(&q, &a, &cfg).unwrap().loss
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            err = err.max((fd - out.grad_primary[idx]).abs());
            scale = scale.max(fd.abs());
        }
        assert!(err / scale < 1e-5, "relative error {}", err / scale);
    }

    #[test]
    fn feature_cloud_validation() {
        assert!(matches!(FeatureCloud::new(vec![], vec![], 2), Err(Error::EmptyCloud)));
        assert!(matches!(
            FeatureCloud::new(vec![[0.0; 3]], vec![1.0], 2),
            Err(Error::LengthMismatch(_))
        ));
        assert!(matches!(
            FeatureCloud::new(vec![[0.0; 3]], vec![f64::NAN, 1.0], 2),
            Err(Error::InvalidPoint(_))
        ));
        assert!(matches!(
            FeatureCloud::from_rows(vec![[0.0; 3]; 2], &[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = random_cloud(10, 3, 1);
        let b = random_cloud(10, 4, 1);
        assert!(matches!(
            lgcm_pipeline(&a, &b, &LgcmConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(lgcm_pipeline(
            &a,
            &a,
            &LgcmConfig {
                k: 0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn config_parses_from_toml() {
        let cfg: LgcmConfig = toml::from_str("m = 64\nstop_aux = true").unwrap();
        assert_eq!(
            cfg,
            LgcmConfig {
                m: 64,
                stop_aux: true,
                ..Default::default()
            }
        );
        assert!(toml::from_str::<LgcmConfig>("radius = 1\nfoo = 2").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn invariant_under_point_order(seed in any::<u64>()) {
            let a = random_cloud(80, 4, seed);
            let p = random_cloud(80, 4, seed.wrapping_add(1));
            let cfg = LgcmConfig { m: 32, radius: 0.5, ..Default::default() };
            let base = lgcm_pipeline(&p, &a, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pa: Vec<usize> = (0..80).collect();
            let mut pp: Vec<usize> = (0..80).collect();
            pa.shuffle(&mut rng);
            pp.shuffle(&mut rng);
            let out = lgcm_pipeline(&p.permuted(&pp), &a.permuted(&pa), &cfg).unwrap();
            prop_assert_eq!(out.loss, base.loss);
            prop_assert_eq!(out.diagnostics, base.diagnostics);
            for (new_i, &old_i) in pp.iter().enumerate() {
                prop_assert_eq!(&out.grad_primary[new_i * 4..new_i * 4 + 4], &base.grad_primary[old_i * 4..old_i * 4 + 4]);
            }
        }
    }
}
