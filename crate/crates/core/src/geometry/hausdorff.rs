use rayon::prelude::*;

use super::{dist2, KdTree, PointCloud};
use crate::error::{Error, Result};

/// Symmetric Hausdorff distance over xyz (intensity ignored).
///
/// Nearest neighbours come from a k-d tree; the value equals the brute
/// force double loop exactly.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (pa, pb) = (a.coords(), b.coords());
    let ab = directed_sq(&pa, &KdTree::new(&pb));
    let ba = directed_sq(&pb, &KdTree::new(&pa));
    Ok(ab.max(ba).sqrt())
}

/// `max_{p in from} min_{q in to} |p - q|`.
pub fn hausdorff_directed(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(directed_sq(&from.coords(), &KdTree::new(&to.coords())).sqrt())
}

fn directed_sq(from: &[[f64; 3]], to: &KdTree) -> f64 {
    from.par_iter()
        .map(|&p| to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2))
        .reduce(|| 0.0, f64::max)
}

/// O(|a|·|b|) reference implementation.
pub fn hausdorff_brute_force(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (pa, pb) = (a.coords(), b.coords());
    let directed = |from: &[[f64; 3]], to: &[[f64; 3]]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(&pa, &pb).max(directed(&pb, &pa)).sqrt())
}
