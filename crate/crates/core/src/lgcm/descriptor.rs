use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};

use super::FeatureCloud;

/// Width of [`toy_descriptor`] features.
pub const TOY_DIM: usize = 10;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;

/// Hand-crafted local geometry per point, standing in for a learned
/// backbone. Over the `k` nearest neighbors within `radius` (the point
/// itself included):
///
/// | slot | feature |
/// |------|---------|
/// | 0 | neighbor count / k |
/// | 1..4 | local centroid minus the point |
/// | 4..7 | covariance eigenvalues, descending |
/// | 7 | linearity `(λ1 − λ2) / λ1` |
/// | 8 | planarity `(λ2 − λ3) / λ1` |
/// | 9 | sphericity `λ3 / λ1` |
///
/// Shape features are zero when `λ1` is zero.
pub fn toy_descriptor(cloud: &PointCloud, radius: f64, k: usize) -> Result<FeatureCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(radius > 0.0) || k == 0 {
        return Err(Error::InvalidConfig(format!(
            "descriptor needs radius > 0 and k >= 1, got {radius}, {k}"
        )));
    }
    let pts = cloud.coords();
    let tree = KdTree::new(&pts);
    let features: Vec<f64> = pts
        .par_iter()
        .flat_map_iter(|&p| {
            let nbrs = tree.k_nearest_within(p, radius, k);
            describe(p, &nbrs.iter().map(|&i| pts[i]).collect::<Vec<_>>(), k)
        })
        .collect();
    FeatureCloud::new(pts, features, TOY_DIM)
}

fn describe(p: [f64; 3], nbrs: &[[f64; 3]], k: usize) -> [f64; TOY_DIM] {
    let mut f = [0.0; TOY_DIM];
    let n = nbrs.len() as f64;
    f[0] = n / k as f64;
    let mut c = [0.0; 3];
    for q in nbrs {
        for a in 0..3 {
            c[a] += q[a];
        }
    }
    let c = c.map(|v| v / n);
    for a in 0..3 {
        f[1 + a] = c[a] - p[a];
    }
    let mut cov = [[0.0; 3]; 3];
    for q in nbrs {
        let d = [q[0] - c[0], q[1] - c[1], q[2] - c[2]];
        for r in 0..3 {
            for s in 0..3 {
                cov[r][s] += d[r] * d[s] / n;
            }
        }
    }
    let mut ev = symmetric_eigenvalues(cov);
    let cutoff = RANK_TOL * ev[0];
    for v in &mut ev {
        if *v < cutoff || *v < 0.0 {
            *v = 0.0;
        }
    }
    f[4..7].copy_from_slice(&ev);
    let [l1, l2, l3] = ev;
    if l1 > 0.0 {
        f[7] = (l1 - l2) / l1;
        f[8] = (l2 - l3) / l1;
        f[9] = l3 / l1;
    }
    f
}

/// Eigenvalues of a symmetric 3×3 matrix, descending (cyclic Jacobi).
pub fn symmetric_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A' = Jᵀ A J with J the (p, q) rotation
            for r in 0..3 {
                let arp = a[r][p];
                let arq = a[r][q];
                a[r][p] = c * arp - s * arq;
                a[r][q] = s * arp + c * arq;
            }
            for r in 0..3 {
                let apr = a[p][r];
                let aqr = a[q][r];
                a[p][r] = c * apr - s * aqr;
                a[q][r] = s * apr + c * aqr;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}
