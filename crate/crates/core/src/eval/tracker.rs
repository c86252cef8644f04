use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrackResult;
use crate::dataset::TrackingSequence;
use crate::error::{Error, Result};
use crate::geometry::{OrientedBox3D, PointCloud};

/// Expansion of the previous box's axis-aligned bounds that defines the
/// search region, meters.
pub const DEFAULT_SEARCH_MARGIN: f64 = 2.0;

/// A single-object tracker driven frame by frame.
pub trait Tracker {
    fn init(&mut self, template: &PointCloud, bbox: &OrientedBox3D);

    /// Next box given the search region and the previous prediction.
    fn track(&mut self, search: &PointCloud, previous: &OrientedBox3D) -> OrientedBox3D;
}

/// Repeats the previous box.
#[derive(Debug, Clone, Default)]
pub struct ConstantPosition;

impl Tracker for ConstantPosition {
    fn init(&mut self, _template: &PointCloud, _bbox: &OrientedBox3D) {}

    fn track(&mut self, _search: &PointCloud, previous: &OrientedBox3D) -> OrientedBox3D {
        *previous
    }
}

/// Moves the previous box by the shift of the centroid of the points
/// around it (the box grown by `pad` meters on each horizontal side).
#[derive(Debug, Clone)]
pub struct CentroidShift {
    pub pad: f64,
    last: Option<[f64; 3]>,
}

impl Default for CentroidShift {
    fn default() -> Self {
        CentroidShift { pad: 0.5, last: None }
    }
}

impl CentroidShift {
    fn centroid_near(&self, cloud: &PointCloud, bbox: &OrientedBox3D) -> Option<[f64; 3]> {
        let grown = OrientedBox3D {
            l: bbox.l + 2.0 * self.pad,
            w: bbox.w + 2.0 * self.pad,
            ..*bbox
        };
        cloud.crop(&grown).centroid()
    }
}

impl Tracker for CentroidShift {
    fn init(&mut self, template: &PointCloud, bbox: &OrientedBox3D) {
        self.last = self.centroid_near(template, bbox);
    }

    fn track(&mut self, search: &PointCloud, previous: &OrientedBox3D) -> OrientedBox3D {
        let Some(now) = self.centroid_near(search, previous) else {
            return *previous;
        };
        let Some(last) = self.last.replace(now) else {
            return *previous;
        };
        previous.translated([now[0] - last[0], now[1] - last[1], now[2] - last[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerKind {
    ConstantPosition,
    CentroidShift,
}

impl TrackerKind {
    pub fn build(self) -> Box<dyn Tracker + Send> {
        match self {
            TrackerKind::ConstantPosition => Box::new(ConstantPosition),
            TrackerKind::CentroidShift => Box::new(CentroidShift::default()),
        }
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackerKind::ConstantPosition => "constant-position",
            TrackerKind::CentroidShift => "centroid-shift",
        })
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-position" => Ok(TrackerKind::ConstantPosition),
            "centroid-shift" => Ok(TrackerKind::CentroidShift),
            other => Err(Error::InvalidConfig(format!("unknown tracker {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    pub results: Vec<TrackResult>,
    /// Frames whose search region was empty; the previous box was repeated.
    pub fallbacks: usize,
}

/// Points inside the previous box's axis-aligned bounds grown by `margin`.
pub fn search_region(cloud: &PointCloud, previous: &OrientedBox3D, margin: f64) -> PointCloud {
    let (lo, hi) = previous.aabb();
    let mask: Vec<bool> = cloud
        .points
        .iter()
        .map(|p| {
            let c = p.coords();
            (0..3).all(|a| c[a] >= lo[a] - margin && c[a] <= hi[a] + margin)
        })
        .collect();
    cloud.select(&mask)
}

/// Runs a fresh tracker over every sequence, initialized from the frame-0
/// ground truth.
pub fn run_reference_tracker(kind: TrackerKind, sequences: &[TrackingSequence], margin: f64) -> Result<TrackingRun> {
    let per_seq: Vec<(TrackResult, usize)> = sequences
        .par_iter()
        .map(|seq| {
            seq.validate()?;
            let first = seq.frames[0].gt_box.ok_or_else(|| Error::InvalidSequence {
                id: seq.sequence_id.clone(),
                reason: "frame 0 has no ground-truth box".into(),
            })?;
            let mut tracker = kind.build();
            tracker.init(&seq.frames[0].cloud.crop(&first), &first);
            let mut prev = first;
            let mut boxes = Vec::with_capacity(seq.len() - 1);
            let mut fallbacks = 0;
            for f in &seq.frames[1..] {
                let search = search_region(&f.cloud, &prev, margin);
                if search.is_empty() {
                    fallbacks += 1;
                } else {
                    prev = tracker.track(&search, &prev);
                }
                boxes.push(prev);
            }
            Ok((
                TrackResult {
                    sequence_id: seq.sequence_id.clone(),
                    boxes,
                },
                fallbacks,
            ))
        })
        .collect::<Result<_>>()?;
    let fallbacks = per_seq.iter().map(|(_, n)| n).sum();
    Ok(TrackingRun {
        results: per_seq.into_iter().map(|(r, _)| r).collect(),
        fallbacks,
    })
}
