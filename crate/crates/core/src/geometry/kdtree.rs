use super::dist2;

const LEAF_SIZE: usize = 8;

/// Static 3-d tree over a borrowed-then-copied coordinate set.
///
/// Stored implicitly: a permutation of point indices where every range
/// `[lo, hi)` larger than a leaf is split at its midpoint on `axis[mid]`.
/// Squared distances come from [`dist2`], so results are bit-identical to
/// a linear scan.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    perm: Vec<usize>,
    axis: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            perm: (0..points.len()).collect(),
            axis: vec![0; points.len()],
        };
        tree.build(0, points.len());
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        self.points[idx]
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in &self.perm[lo..hi] {
            for k in 0..3 {
                min[k] = min[k].min(self.points[i][k]);
                max[k] = max[k].max(self.points[i][k]);
            }
        }
        let ax = (0..3)
            .max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b])))
            .unwrap_or(0);
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.perm[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| pts[a][ax].total_cmp(&pts[b][ax]));
        self.axis[mid] = ax as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    /// Nearest point to `q` as `(index, squared distance)`; ties go to the
    /// lowest index.
    pub fn nearest(&self, q: [f64; 3]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, self.points.len(), q, &mut best);
        Some(best)
    }

    fn consider(best: &mut (usize, f64), idx: usize, d2: f64) {
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
    }

    fn nearest_in(&self, lo: usize, hi: usize, q: [f64; 3], best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.perm[lo..hi] {
                Self::consider(best, i, dist2(&q, &self.points[i]));
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.perm[mid];
        let ax = self.axis[mid] as usize;
        Self::consider(best, idx, dist2(&q, &self.points[idx]));
        let diff = q[ax] - self.points[idx][ax];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_in(near.0, near.1, q, best);
        if diff * diff <= best.1 {
            self.nearest_in(far.0, far.1, q, best);
        }
    }

    /// All points with squared distance `<= radius²`, as `(squared distance,
    /// index)` in unspecified order.
    pub fn within_radius(&self, q: [f64; 3], radius: f64) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.radius_in(0, self.points.len(), q, radius * radius, &mut out);
        }
        out
    }

    fn radius_in(&self, lo: usize, hi: usize, q: [f64; 3], r2: f64, out: &mut Vec<(f64, usize)>) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.perm[lo..hi] {
                let d2 = dist2(&q, &self.points[i]);
                if d2 <= r2 {
                    out.push((d2, i));
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.perm[mid];
        let ax = self.axis[mid] as usize;
        let d2 = dist2(&q, &self.points[idx]);
        if d2 <= r2 {
            out.push((d2, idx));
        }
        let diff = q[ax] - self.points[idx][ax];
        if diff <= 0.0 || diff * diff <= r2 {
            self.radius_in(lo, mid, q, r2, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.radius_in(mid + 1, hi, q, r2, out);
        }
    }

    /// Up to `k` nearest indices within `radius`, ordered by distance with
    /// ties broken by index.
    pub fn k_nearest_within(&self, q: [f64; 3], radius: f64, k: usize) -> Vec<usize> {
        let mut hits = self.within_radius(q, radius);
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits.truncate(k);
        hits.into_iter().map(|(_, i)| i).collect()
    }
}
