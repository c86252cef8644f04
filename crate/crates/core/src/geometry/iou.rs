use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::OrientedBox3D;

/// Which overlap a tracking score is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouMode {
    /// Volume overlap of the oriented cuboids.
    #[default]
    #[serde(rename = "3d")]
    Full3d,
    /// Ground-plane footprint overlap only.
    Bev,
}

pub fn iou_with(mode: IouMode, a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    match mode {
        IouMode::Full3d => iou_3d(a, b),
        IouMode::Bev => iou_bev(a, b),
    }
}

/// Volume IoU of two oriented boxes: BEV polygon intersection times the
/// vertical interval overlap, over the union volume.
pub fn iou_3d(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    if a == b {
        return 1.0;
    }
    let (a, b) = canonical_pair(a, b);
    let z_overlap = (a.cz + a.h / 2.0).min(b.cz + b.h / 2.0) - (a.cz - a.h / 2.0).max(b.cz - b.h / 2.0);
    if z_overlap <= 0.0 {
        return 0.0;
    }
    let area = bev_intersection_area(a, b);
    if area <= 0.0 {
        return 0.0;
    }
    let inter = area * z_overlap;
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Footprint IoU of two oriented boxes (heights ignored).
pub fn iou_bev(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    if a == b {
        return 1.0;
    }
    let (a, b) = canonical_pair(a, b);
    let inter = bev_intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.l * a.w + b.l * b.w - inter)).clamp(0.0, 1.0)
}

/// Area of the intersection of the two yaw-rotated footprints, by
/// clipping one rectangle against the other.
pub fn bev_intersection_area(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    let subject = a.bev_corners().to_vec();
    let clip = b.bev_corners();
    polygon_area(&clip_convex(subject, &clip)).max(0.0)
}

// Fixed argument order makes the floating-point result exactly symmetric.
fn canonical_pair<'a>(a: &'a OrientedBox3D, b: &'a OrientedBox3D) -> (&'a OrientedBox3D, &'a OrientedBox3D) {
    let key = |x: &OrientedBox3D| [x.cx, x.cy, x.cz, x.l, x.w, x.h, x.yaw];
    let ord = key(a)
        .iter()
        .zip(key(b).iter())
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal);
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

#[inline]
fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Sutherland–Hodgman clipping of `subject` by a counter-clockwise convex polygon.
fn clip_convex(mut subject: Vec<[f64; 2]>, clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    for i in 0..clip.len() {
        if subject.is_empty() {
            break;
        }
        let (e0, e1) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut subject);
        let mut prev = *input.last().unwrap();
        let mut prev_side = cross(e0, e1, prev);
        for &cur in &input {
            let side = cross(e0, e1, cur);
            if side >= 0.0 {
                if prev_side < 0.0 {
                    subject.push(intersect(prev, cur, prev_side, side));
                }
                subject.push(cur);
            } else if prev_side >= 0.0 {
                subject.push(intersect(prev, cur, prev_side, side));
            }
            prev = cur;
            prev_side = side;
        }
    }
    subject
}

fn intersect(p: [f64; 2], q: [f64; 2], sp: f64, sq: f64) -> [f64; 2] {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    twice / 2.0
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn bx(c: [f64; 3], s: [f64; 3], yaw: f64) -> OrientedBox3D {
        OrientedBox3D::new(c, s, yaw).unwrap()
    }

    fn axis_aligned_iou(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
        // extents along x/y swap when the yaw is an odd multiple of pi/2
        let ext = |x: &OrientedBox3D| {
            let quarter = (x.yaw / FRAC_PI_2).round() as i64;
            if quarter.rem_euclid(2) == 1 {
                [x.w, x.l, x.h]
            } else {
                [x.l, x.w, x.h]
            }
        };
        let (ea, eb) = (ext(a), ext(b));
        let (ca, cb) = (a.center(), b.center());
        let mut inter = 1.0;
        for k in 0..3 {
            let lo = (ca[k] - ea[k] / 2.0).max(cb[k] - eb[k] / 2.0);
            let hi = (ca[k] + ea[k] / 2.0).min(cb[k] + eb[k] / 2.0);
            inter *= (hi - lo).max(0.0);
        }
        inter / (a.volume() + b.volume() - inter)
    }

    #[test]
    fn identical_boxes() {
        let a = bx([1.0, 2.0, 0.5], [4.0, 2.0, 1.5], 0.3);
        assert_eq!(iou_3d(&a, &a), 1.0);
        assert_eq!(iou_bev(&a, &a), 1.0);
    }

    #[test]
    fn disjoint_footprints() {
        let a = bx([0.0; 3], [1.0; 3], 0.2);
        let b = bx([5.0, 0.0, 0.0], [1.0; 3], -0.7);
        assert_eq!(iou_3d(&a, &b), 0.0);
    }

    #[test]
    fn offset_unit_cubes() {
        let a = bx([0.0; 3], [1.0; 3], 0.0);
        let b = bx([0.5, 0.0, 0.0], [1.0; 3], 0.0);
        assert!((iou_3d(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn touching_faces_give_zero() {
        let a = bx([0.0; 3], [1.0; 3], 0.0);
        let b = bx([1.0, 0.0, 0.0], [1.0; 3], 0.0);
        assert_eq!(iou_3d(&a, &b), 0.0);
        let c = bx([0.0, 0.0, 1.0], [1.0; 3], 0.0);
        assert_eq!(iou_3d(&a, &c), 0.0);
    }

    #[test]
    fn half_turn_occupies_the_same_cuboid() {
        let a = bx([2.0, -1.0, 0.3], [4.0, 2.0, 1.5], 0.4);
        let b = bx([2.0, -1.0, 0.3], [4.0, 2.0, 1.5], 0.4 + PI);
        assert!((iou_3d(&a, &b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vertical_offset_scales_overlap() {
        let a = bx([0.0; 3], [2.0, 2.0, 2.0], 0.7);
        let b = bx([0.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.7);
        // intersection 4*1, union 8+8-4
        assert!((iou_3d(&a, &b) - 4.0 / 12.0).abs() < 1e-12);
        assert!((iou_bev(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_pair_matches_monte_carlo() {
        let a = bx([0.0; 3], [4.0, 2.0, 1.5], 0.0);
        let b = bx([0.0; 3], [4.0, 2.0, 1.5], PI / 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let p = [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.75..0.75),
                ];
                b.contains(p)
            })
            .count();
        let inter = a.volume() * hits as f64 / n as f64;
        let mc = inter / (a.volume() + b.volume() - inter);
        assert!((iou_3d(&a, &b) - mc).abs() < 0.003, "{} vs {}", iou_3d(&a, &b), mc);
    }

    #[test]
    fn quarter_turn_yaws_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let rand_box = |rng: &mut ChaCha8Rng| {
                let q = rng.random_range(-1..=2) as f64;
                bx(
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-0.5..0.5),
                    ],
                    [
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..2.0),
                    ],
                    q * FRAC_PI_2,
                )
            };
            let (a, b) = (rand_box(&mut rng), rand_box(&mut rng));
            assert!((iou_3d(&a, &b) - axis_aligned_iou(&a, &b)).abs() < 1e-9);
        }
    }

    fn arb_box() -> impl Strategy<Value = OrientedBox3D> {
        (
            (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0),
            (0.2f64..4.0, 0.2f64..3.0, 0.2f64..2.0),
            -PI..PI,
        )
            .prop_map(|(c, s, yaw)| bx([c.0, c.1, c.2], [s.0, s.1, s.2], yaw))
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou_3d(&a, &b);
            prop_assert_eq!(ab, iou_3d(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            let bev = iou_bev(&a, &b);
            prop_assert_eq!(bev, iou_bev(&b, &a));
            prop_assert!((0.0..=1.0).contains(&bev));
        }

        #[test]
        fn yaw_plus_pi_is_identity(a in arb_box()) {
            let flipped = bx(a.center(), [a.l, a.w, a.h], a.yaw + PI);
            prop_assert!((iou_3d(&a, &flipped) - 1.0).abs() < 1e-9);
        }
    }
}
