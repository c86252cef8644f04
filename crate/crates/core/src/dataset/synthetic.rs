//! Ring-scanner simulation of a cuboid target moving over a ground plane.
//!
//! Each frame casts `rings × points_per_ring` rays from the sensor origin
//! and keeps the closest hit among the target box and the ground plane
//! `z = -sensor_height`, then scatters clutter points outside the target.
//! Target hits are nudged inward by a relative 1e-9 so that boundary
//! containment survives the round trip through world coordinates.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Category, Frame, TrackingSequence};
use crate::error::{Error, Result};
use crate::geometry::{OrientedBox3D, Point3, PointCloud};
use crate::seed::{derive_seed, stream_rng};

const INWARD: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trajectory {
    /// Constant velocity per frame, fixed heading.
    Linear { velocity: [f64; 3] },
    /// Constant speed along the heading, heading turning by `yaw_rate`
    /// radians per frame.
    Arc { speed: f64, yaw_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub sequence_id: Option<String>,
    pub category: Category,
    pub frames: usize,
    pub frame_dt: f64,
    /// Target center in frame 0.
    pub start: [f64; 3],
    /// Target (l, w, h).
    pub size: [f64; 3],
    pub yaw: f64,
    pub trajectory: Trajectory,
    pub rings: usize,
    pub points_per_ring: usize,
    /// Lowest and highest beam elevation, degrees.
    pub elevation_deg: [f64; 2],
    pub max_range: f64,
    pub ground: bool,
    pub sensor_height: f64,
    /// Clutter points per frame, placed outside the target box.
    pub clutter: usize,
    pub target_intensity: [f64; 2],
    pub ground_intensity: [f64; 2],
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            sequence_id: None,
            category: Category::Car,
            frames: 10,
            frame_dt: 0.1,
            start: [10.0, 2.0, -0.95],
            size: [3.9, 1.6, 1.56],
            yaw: 0.0,
            trajectory: Trajectory::Linear {
                velocity: [0.2, 0.0, 0.0],
            },
            rings: 32,
            points_per_ring: 1024,
            elevation_deg: [-25.0, 3.0],
            max_range: 80.0,
            ground: true,
            sensor_height: 1.73,
            clutter: 200,
            target_intensity: [0.2, 0.6],
            ground_intensity: [0.02, 0.15],
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::InvalidConfig(format!("scene: {m}")));
        if self.frames < 2 {
            return err("needs at least 2 frames");
        }
        if self.size.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return err("size must be positive");
        }
        if self.rings == 0 || self.points_per_ring == 0 {
            return err("rings and points_per_ring must be at least 1");
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return err("max_range must be positive");
        }
        if !(self.frame_dt >= 0.0 && self.frame_dt.is_finite()) {
            return err("frame_dt must be non-negative");
        }
        if !(self.elevation_deg[0] < self.elevation_deg[1]) {
            return err("elevation_deg must be [low, high]");
        }
        for (name, r) in [
            ("target_intensity", self.target_intensity),
            ("ground_intensity", self.ground_intensity),
        ] {
            if !(r[0] <= r[1]) {
                return err(&format!("{name} must be [low, high]"));
            }
        }
        let finite = self
            .start
            .iter()
            .chain([&self.yaw, &self.sensor_height])
            .all(|v| v.is_finite());
        if !finite {
            return err("start, yaw and sensor_height must be finite");
        }
        Ok(())
    }

    /// Ground-truth box of every frame.
    pub fn boxes(&self) -> Vec<OrientedBox3D> {
        let mut center = self.start;
        let mut heading = self.yaw;
        let mut out = Vec::with_capacity(self.frames);
        for _ in 0..self.frames {
            out.push(OrientedBox3D::new(center, self.size, heading).expect("scene size must be positive"));
            match self.trajectory {
                Trajectory::Linear { velocity } => {
                    for k in 0..3 {
                        center[k] += velocity[k];
                    }
                }
                Trajectory::Arc { speed, yaw_rate } => {
                    center[0] += speed * heading.cos();
                    center[1] += speed * heading.sin();
                    heading += yaw_rate;
                }
            }
        }
        out
    }
}

/// Where a synthetic return came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    Target,
    Ground,
    Clutter,
}

pub fn generate_synthetic_scene(spec: &SceneSpec, seed: u64) -> TrackingSequence {
    let frames = spec
        .boxes()
        .into_iter()
        .enumerate()
        .map(|(k, gt)| {
            let (cloud, _) = render_frame(spec, &gt, derive_seed(seed, "synthetic", k as u64));
            Frame {
                cloud: cloud.with_frame_index(k as u64),
                gt_box: Some(gt),
                timestamp: k as f64 * spec.frame_dt,
            }
        })
        .collect();
    TrackingSequence {
        sequence_id: spec.sequence_id.clone().unwrap_or_else(|| format!("synth-{seed:04}")),
        category: spec.category,
        frames,
        condition_tags: BTreeSet::new(),
    }
}

/// One sweep around `target`, with the origin of every point.
pub fn render_frame(spec: &SceneSpec, target: &OrientedBox3D, seed: u64) -> (PointCloud, Vec<PointSource>) {
    let mut rng = stream_rng(seed, 0);
    let mut points = Vec::new();
    let mut sources = Vec::new();
    let az_offset = rng.random_range(0.0..2.0 * PI / spec.points_per_ring.max(1) as f64);
    let [e0, e1] = spec.elevation_deg.map(f64::to_radians);
    for ring in 0..spec.rings {
        let el = if spec.rings > 1 {
            e0 + (e1 - e0) * ring as f64 / (spec.rings - 1) as f64
        } else {
            e0
        };
        for j in 0..spec.points_per_ring {
            let az = az_offset + 2.0 * PI * j as f64 / spec.points_per_ring as f64;
            let dir = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
            let t_box = ray_box(target, dir).filter(|t| *t <= spec.max_range);
            let t_ground = (spec.ground && dir[2] < 0.0)
                .then(|| -spec.sensor_height / dir[2])
                .filter(|t| *t <= spec.max_range);
            match (t_box, t_ground) {
                (Some(tb), tg) if tg.is_none_or(|tg| tb <= tg) => {
                    let q = target.to_local([dir[0] * tb, dir[1] * tb, dir[2] * tb]);
                    let q = [
                        q[0].clamp(-target.l / 2.0, target.l / 2.0) * INWARD,
                        q[1].clamp(-target.w / 2.0, target.w / 2.0) * INWARD,
                        q[2].clamp(-target.h / 2.0, target.h / 2.0) * INWARD,
                    ];
                    let p = target.to_world(q);
                    let i = rng.random_range(spec.target_intensity[0]..=spec.target_intensity[1]);
                    points.push(Point3::new(p[0], p[1], p[2], i));
                    sources.push(PointSource::Target);
                }
                (_, Some(tg)) => {
                    let i = rng.random_range(spec.ground_intensity[0]..=spec.ground_intensity[1]);
                    points.push(Point3::new(dir[0] * tg, dir[1] * tg, -spec.sensor_height, i));
                    sources.push(PointSource::Ground);
                }
                _ => {}
            }
        }
    }
    let mut placed = 0;
    while placed < spec.clutter {
        let r = rng.random_range(3.0..spec.max_range.max(3.5) / 2.0);
        let az = rng.random_range(0.0..2.0 * PI);
        let z = -spec.sensor_height + rng.random_range(0.0..2.5);
        let i: f64 = rng.random_range(0.05..0.5);
        let p = [r * az.cos(), r * az.sin(), z];
        if target.contains(p) {
            continue;
        }
        points.push(Point3::new(p[0], p[1], p[2], i));
        sources.push(PointSource::Clutter);
        placed += 1;
    }
    (PointCloud::new(points), sources)
}

/// First positive hit distance of a ray from the sensor origin; the exit
/// distance when the origin is inside the box.
fn ray_box(b: &OrientedBox3D, dir: [f64; 3]) -> Option<f64> {
    let o = b.to_local([0.0; 3]);
    let (s, c) = b.yaw.sin_cos();
    let d = [c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]];
    let half = [b.l / 2.0, b.w / 2.0, b.h / 2.0];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let a = (-half[k] - o[k]) / d[k];
        let bb = (half[k] - o[k]) / d[k];
        t0 = t0.max(a.min(bb));
        t1 = t1.min(a.max(bb));
    }
    if t1 < t0.max(0.0) {
        return None;
    }
    Some(if t0 > 0.0 { t0 } else { t1 })
}
