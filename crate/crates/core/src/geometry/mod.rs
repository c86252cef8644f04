//! Geometric primitives: points, clouds, oriented boxes and the exact
//! queries built on them (containment, 3D IoU, Hausdorff distance).

mod hausdorff;
mod iou;
mod kdtree;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hausdorff::{hausdorff_brute_force, hausdorff_directed, hausdorff_distance};
pub use iou::{bev_intersection_area, iou_3d, iou_bev, iou_with, IouMode};
pub use kdtree::KdTree;

/// One LiDAR return. Coordinates in meters (sensor frame, z up),
/// intensity a reflectance in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        intensity: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point3 { x, y, z, intensity }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point3 {
            x,
            y,
            z,
            intensity: 0.0,
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance_squared(&self, other: &Point3) -> f64 {
        dist2(&self.coords(), &other.coords())
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidPoint(format!("non-finite value in {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.intensity) {
            return Err(Error::InvalidPoint(format!(
                "intensity {} outside [0, 1]",
                self.intensity
            )));
        }
        Ok(())
    }
}

/// Squared Euclidean distance. Every distance in the crate goes through
/// this one expression so that indexed and brute-force searches agree
/// bit for bit.
#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// A single LiDAR sweep (or a crop of one).
///
/// Point order only matters for I/O round trips; no geometric result
/// depends on it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    #[serde(default)]
    pub frame_index: u64,
    #[serde(default)]
    pub sensor_origin: Point3,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            frame_index: 0,
            sensor_origin: Point3::ORIGIN,
        }
    }

    pub fn with_frame_index(mut self, frame_index: u64) -> Self {
        self.frame_index = frame_index;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(Point3::coords).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.points.iter().try_for_each(Point3::validate)
    }

    /// Copy of this cloud keeping only the points whose mask entry is set.
    pub fn select(&self, mask: &[bool]) -> PointCloud {
        PointCloud {
            points: self
                .points
                .iter()
                .zip(mask)
                .filter_map(|(p, &keep)| keep.then_some(*p))
                .collect(),
            frame_index: self.frame_index,
            sensor_origin: self.sensor_origin,
        }
    }

    /// Points inside `bbox` (boundary inclusive).
    pub fn crop(&self, bbox: &OrientedBox3D) -> PointCloud {
        let (_, mask) = points_in_box(self, bbox);
        self.select(&mask)
    }

    pub fn centroid(&self) -> Option<[f64; 3]> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            c[0] += p.x;
            c[1] += p.y;
            c[2] += p.z;
        }
        Some([c[0] / n, c[1] / n, c[2] / n])
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let mut a = yaw.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid maps -π to π already; 2π - tiny can round back to π.
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Target state: center, extents (length along heading, width, height)
/// and yaw about z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

impl OrientedBox3D {
    /// Builds a box, wrapping yaw into `(-π, π]` and validating extents.
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64) -> Result<Self> {
        let b = OrientedBox3D {
            cx: center[0],
            cy: center[1],
            cz: center[2],
            l: size[0],
            w: size[1],
            h: size[2],
            yaw: normalize_yaw(yaw),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.l <= 0.0 || self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "extents must be positive, got ({}, {}, {})",
                self.l, self.w, self.h
            )));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::InvalidBox(format!("yaw {} outside (-pi, pi]", self.yaw)));
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    pub fn translated(&self, d: [f64; 3]) -> Self {
        OrientedBox3D {
            cx: self.cx + d[0],
            cy: self.cy + d[1],
            cz: self.cz + d[2],
            ..*self
        }
    }

    /// Coordinates of `p` in the box frame (translate by -center, rotate by -yaw).
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.cx;
        let dy = p[1] - self.cy;
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.cz]
    }

    pub fn to_world(&self, q: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.cx + c * q[0] - s * q[1],
            self.cy + s * q[0] + c * q[1],
            self.cz + q[2],
        ]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let q = self.to_local(p);
        q[0].abs() <= self.l / 2.0 && q[1].abs() <= self.w / 2.0 && q[2].abs() <= self.h / 2.0
    }

    /// Bird's-eye-view corners, counter-clockwise.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.l / 2.0, self.w / 2.0);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(x, y)| [self.cx + c * x - s * y, self.cy + s * x + c * y])
    }

    /// Axis-aligned bounds `(min, max)` of the box.
    pub fn aabb(&self) -> ([f64; 3], [f64; 3]) {
        let (s, c) = self.yaw.sin_cos();
        let ex = (c * self.l / 2.0).abs() + (s * self.w / 2.0).abs();
        let ey = (s * self.l / 2.0).abs() + (c * self.w / 2.0).abs();
        let ez = self.h / 2.0;
        (
            [self.cx - ex, self.cy - ey, self.cz - ez],
            [self.cx + ex, self.cy + ey, self.cz + ez],
        )
    }
}

/// Boundary-inclusive containment test. Returns the count and a mask
/// aligned with the input order.
pub fn points_in_box(cloud: &PointCloud, bbox: &OrientedBox3D) -> (usize, Vec<bool>) {
    let mask: Vec<bool> = cloud.points.iter().map(|p| bbox.contains(p.coords())).collect();
    let count = mask.iter().filter(|&&m| m).count();
    (count, mask)
}

/// Ground-plane range from `origin` to the box center (z excluded).
pub fn target_distance(bbox: &OrientedBox3D, origin: &Point3) -> f64 {
    (bbox.cx - origin.x).hypot(bbox.cy - origin.y)
}
