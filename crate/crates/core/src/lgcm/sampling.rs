use crate::error::{Error, Result};
use crate::geometry::{dist2, KdTree};

use super::FeatureCloud;

/// Greedy farthest point sampling. Starts from the point nearest the
/// centroid; every later pick maximizes the distance to the picked set.
/// Ties go to the lowest index. Indices are returned in pick order.
pub fn farthest_point_sample(points: &[[f64; 3]], m: usize) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if m == 0 || m > points.len() {
        return Err(Error::SampleSizeExceedsCloud {
            requested: m,
            available: points.len(),
        });
    }
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for a in 0..3 {
            c[a] += p[a];
        }
    }
    let c = c.map(|v| v / n);
    let first = argmin(points.iter().map(|p| dist2(p, &c)));

    let mut picked = Vec::with_capacity(m);
    let mut min_d2 = vec![f64::INFINITY; points.len()];
    let mut taken = vec![false; points.len()];
    let mut next = first;
    for _ in 0..m {
        picked.push(next);
        taken[next] = true;
        let q = points[next];
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, p) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = dist2(p, &q);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
            if min_d2[i] > best.0 {
                best = (min_d2[i], i);
            }
        }
        next = best.1;
    }
    Ok(picked)
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, v) in values.enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    best.1
}

/// Up to `k` points within `radius` of `key` (boundary inclusive), nearest
/// first, distance ties broken by index. Linear scan.
pub fn ball_query(key: [f64; 3], points: &[[f64; 3]], radius: f64, k: usize) -> Vec<usize> {
    let r2 = radius * radius;
    let mut hits: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let d = dist2(p, &key);
            (d <= r2).then_some((d, i))
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.truncate(k);
    hits.into_iter().map(|(_, i)| i).collect()
}

/// Coordinate-wise max of the features of the ball-query neighbors of
/// `key`. An empty ball yields the all-zero vector and `found == false`.
pub fn aggregate_local_feature(key: [f64; 3], cloud: &FeatureCloud, radius: f64, k: usize) -> (Vec<f64>, bool) {
    let nbrs = ball_query(key, cloud.points(), radius, k);
    match max_pool(cloud, &nbrs) {
        Some((v, _)) => (v, true),
        None => (vec![0.0; cloud.dim()], false),
    }
}

/// Max-pooled feature plus, per dimension, the neighbor that supplied it
/// (first in neighbor order on ties).
pub(crate) fn max_pool(cloud: &FeatureCloud, nbrs: &[usize]) -> Option<(Vec<f64>, Vec<usize>)> {
    let (&first, rest) = nbrs.split_first()?;
    let mut v = cloud.feature(first).to_vec();
    let mut src = vec![first; cloud.dim()];
    for &j in rest {
        for (d, &f) in cloud.feature(j).iter().enumerate() {
            if f > v[d] {
                v[d] = f;
                src[d] = j;
            }
        }
    }
    Some((v, src))
}

/// Ball query through a prebuilt index; same result as [`ball_query`].
pub(crate) fn ball_query_indexed(tree: &KdTree, key: [f64; 3], radius: f64, k: usize) -> Vec<usize> {
    tree.k_nearest_within(key, radius, k)
}
