//! Tracking sequences, benchmark construction and on-disk formats.

pub mod filter;
pub mod grid;
pub mod io;
pub mod manifest;
pub mod synthetic;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox3D, PointCloud};

pub use filter::filter_real_sequences;
pub use grid::{build_corruption_grid, CorruptionGrid};
pub use manifest::{group_by_condition, DatasetManifest, Grouping, Provenance, SequenceEntry, MANIFEST_SCHEMA};
pub use synthetic::{generate_synthetic_scene, SceneSpec, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Car,
    Pedestrian,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Car => "car",
            Category::Pedestrian => "pedestrian",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "car" => Ok(Category::Car),
            "pedestrian" | "ped" => Ok(Category::Pedestrian),
            other => Err(Error::InvalidConfig(format!("unknown category {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub cloud: PointCloud,
    pub gt_box: Option<OrientedBox3D>,
    /// Seconds; non-decreasing along a sequence.
    pub timestamp: f64,
}

/// One target followed through consecutive frames. The first frame holds
/// the template.
///
/// Condition tags are `key:value` strings such as `weather:snow`,
/// `level:3` or `road:covered`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSequence {
    pub sequence_id: String,
    pub category: Category,
    pub frames: Vec<Frame>,
    pub condition_tags: BTreeSet<String>,
}

impl TrackingSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidSequence {
            id: self.sequence_id.clone(),
            reason,
        };
        if self.frames.len() < 2 {
            return Err(invalid(format!("needs at least 2 frames, has {}", self.frames.len())));
        }
        if self.frames.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(invalid("timestamps decrease".into()));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if let Some(b) = &f.gt_box {
                b.validate().map_err(|e| invalid(format!("frame {i}: {e}")))?;
            }
        }
        Ok(())
    }

    /// Value of the first tag of the form `key:value`.
    pub fn tag(&self, key: &str) -> Option<&str> {
        tag_value(&self.condition_tags, key)
    }

    pub fn gt_boxes(&self) -> Result<Vec<OrientedBox3D>> {
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.gt_box.ok_or_else(|| Error::InvalidSequence {
                    id: self.sequence_id.clone(),
                    reason: format!("frame {i} has no ground-truth box"),
                })
            })
            .collect()
    }
}

pub(crate) fn tag_value<'a, I>(tags: I, key: &str) -> Option<&'a str>
where
    I: IntoIterator<Item = &'a String>,
{
    tags.into_iter()
        .find_map(|t| t.split_once(':').filter(|(k, _)| *k == key).map(|(_, v)| v))
}
