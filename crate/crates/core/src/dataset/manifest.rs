//! Dataset manifests (`stormbench-manifest/1`).
//!
//! ```json
//! {
//!   "schema": "stormbench-manifest/1",
//!   "name": "kitti-a-car",
//!   "sequences": [
//!     {
//!       "id": "0001",
//!       "category": "car",
//!       "frame_count": 3,
//!       "clouds": ["0001/000000.bin", "0001/000001.bin", "0001/000002.bin"],
//!       "labels": "0001/labels.jsonl",
//!       "timestamps": [0.0, 0.1, 0.2],
//!       "condition_tags": ["weather:clean"]
//!     }
//!   ],
//!   "provenance": { "tool": "stormbench 0.1.0", "seed": 0, "config": {} }
//! }
//! ```
//!
//! Paths are relative to the directory holding the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{read_cloud_bin, read_labels, write_cloud_bin, write_labels};
use super::{tag_value, Category, Frame, TrackingSequence};
use crate::error::{Error, Result};
use crate::geometry::OrientedBox3D;

pub const MANIFEST_SCHEMA: &str = "stormbench-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub id: String,
    pub category: Category,
    pub frame_count: usize,
    pub clouds: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
    #[serde(default)]
    pub condition_tags: Vec<String>,
}

impl SequenceEntry {
    /// Entry for `seq` using the standard `<id>/<frame>.bin` layout.
    pub fn describe(seq: &TrackingSequence) -> Self {
        let dir = path_safe(&seq.sequence_id);
        SequenceEntry {
            id: seq.sequence_id.clone(),
            category: seq.category,
            frame_count: seq.len(),
            clouds: (0..seq.len()).map(|k| format!("{dir}/{k:06}.bin")).collect(),
            labels: seq
                .frames
                .iter()
                .any(|f| f.gt_box.is_some())
                .then(|| format!("{dir}/labels.jsonl")),
            timestamps: Some(seq.frames.iter().map(|f| f.timestamp).collect()),
            condition_tags: seq.condition_tags.iter().cloned().collect(),
        }
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        tag_value(&self.condition_tags, key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub seed: u64,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(seed: u64, config: serde_json::Value) -> Self {
        Provenance {
            tool: concat!("stormbench ", env!("CARGO_PKG_VERSION")).to_string(),
            seed,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: String,
    pub name: String,
    pub sequences: Vec<SequenceEntry>,
    pub provenance: Provenance,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, sequences: Vec<SequenceEntry>, provenance: Provenance) -> Self {
        DatasetManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            name: name.into(),
            sequences,
            provenance,
        }
    }

    pub fn total_frames(&self) -> usize {
        self.sequences.iter().map(|s| s.frame_count).sum()
    }

    /// Frames of sequences tagged with a weather kind other than `clean`.
    pub fn corrupted_frames(&self) -> usize {
        self.sequences
            .iter()
            .filter(|s| matches!(s.tag("weather"), Some(w) if w != "clean"))
            .map(|s| s.frame_count)
            .sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::SchemaMismatch(format!(
                "schema {:?}, expected {MANIFEST_SCHEMA:?}",
                m.schema
            )));
        }
        for s in &m.sequences {
            if s.clouds.len() != s.frame_count {
                return Err(Error::CountMismatch {
                    what: format!("sequence {} cloud list", s.id),
                    expected: s.frame_count,
                    found: s.clouds.len(),
                });
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Checks every referenced file exists and each label sidecar fits its
    /// sequence length.
    pub fn verify(&self, root: &Path) -> Result<()> {
        self.sequences.par_iter().try_for_each(|s| {
            let present = s.clouds.iter().filter(|c| root.join(c).is_file()).count();
            if present != s.frame_count {
                return Err(Error::CountMismatch {
                    what: format!("sequence {} cloud files", s.id),
                    expected: s.frame_count,
                    found: present,
                });
            }
            if let Some(ts) = &s.timestamps {
                if ts.len() != s.frame_count {
                    return Err(Error::CountMismatch {
                        what: format!("sequence {} timestamps", s.id),
                        expected: s.frame_count,
                        found: ts.len(),
                    });
                }
            }
            if let Some(labels) = &s.labels {
                read_labels(&root.join(labels), s.frame_count)?;
            }
            Ok(())
        })
    }

    /// Sub-manifest with the given entries, same name and provenance.
    pub fn with_sequences(&self, sequences: Vec<SequenceEntry>) -> Self {
        DatasetManifest {
            sequences,
            ..self.clone()
        }
    }
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    DatasetManifest::from_json(&text)
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    fs::write(path, manifest.to_json() + "\n").map_err(|e| Error::io(path, e))
}

/// Directory holding a manifest file (paths in it are relative to this).
pub fn manifest_root(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn path_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.@".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes the clouds and labels of `seq` under `root` following `entry`.
pub fn write_sequence(root: &Path, entry: &SequenceEntry, seq: &TrackingSequence) -> Result<()> {
    if let Some(first) = entry.clouds.first() {
        if let Some(parent) = root.join(first).parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    for (rel, frame) in entry.clouds.iter().zip(&seq.frames) {
        write_cloud_bin(&root.join(rel), &frame.cloud)?;
    }
    if let Some(labels) = &entry.labels {
        let boxes: Vec<Option<OrientedBox3D>> = seq.frames.iter().map(|f| f.gt_box).collect();
        write_labels(&root.join(labels), &boxes)?;
    }
    Ok(())
}

/// Writes all sequences (in parallel) and then the manifest, under `root`.
pub fn write_dataset(
    root: &Path,
    name: &str,
    sequences: &[TrackingSequence],
    provenance: Provenance,
) -> Result<DatasetManifest> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let entries: Vec<SequenceEntry> = sequences.iter().map(SequenceEntry::describe).collect();
    entries
        .par_iter()
        .zip(sequences.par_iter())
        .try_for_each(|(e, s)| write_sequence(root, e, s))?;
    let manifest = DatasetManifest::new(name, entries, provenance);
    write_manifest(&root.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn load_sequence(root: &Path, entry: &SequenceEntry) -> Result<TrackingSequence> {
    let boxes = match &entry.labels {
        Some(l) => read_labels(&root.join(l), entry.frame_count)?,
        None => vec![None; entry.frame_count],
    };
    let frames = entry
        .clouds
        .iter()
        .zip(boxes)
        .enumerate()
        .map(|(k, (rel, gt_box))| {
            let cloud = read_cloud_bin(&root.join(rel))?.with_frame_index(k as u64);
            let timestamp = entry
                .timestamps
                .as_ref()
                .and_then(|t| t.get(k).copied())
                .unwrap_or(k as f64);
            Ok(Frame {
                cloud,
                gt_box,
                timestamp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackingSequence {
        sequence_id: entry.id.clone(),
        category: entry.category,
        frames,
        condition_tags: entry.condition_tags.iter().cloned().collect(),
    })
}

pub fn load_sequences(root: &Path, manifest: &DatasetManifest) -> Result<Vec<TrackingSequence>> {
    manifest.sequences.par_iter().map(|e| load_sequence(root, e)).collect()
}

/// Ground-truth boxes per sequence, read from label sidecars only.
pub fn load_ground_truth(
    root: &Path,
    manifest: &DatasetManifest,
) -> Result<BTreeMap<String, Vec<Option<OrientedBox3D>>>> {
    manifest
        .sequences
        .iter()
        .map(|e| {
            let boxes = match &e.labels {
                Some(l) => read_labels(&root.join(l), e.frame_count)?,
                None => vec![None; e.frame_count],
            };
            Ok((e.id.clone(), boxes))
        })
        .collect()
}

/// Partition of a manifest by the value of one tag key.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub groups: BTreeMap<String, DatasetManifest>,
    pub untagged: DatasetManifest,
}

pub fn group_by_condition(manifest: &DatasetManifest, tag_key: &str) -> Grouping {
    let mut groups: BTreeMap<String, Vec<SequenceEntry>> = BTreeMap::new();
    let mut untagged = Vec::new();
    for s in &manifest.sequences {
        match s.tag(tag_key) {
            Some(v) => groups.entry(v.to_string()).or_default().push(s.clone()),
            None => untagged.push(s.clone()),
        }
    }
    Grouping {
        groups: groups
            .into_iter()
            .map(|(k, v)| (k, manifest.with_sequences(v)))
            .collect(),
        untagged: manifest.with_sequences(untagged),
    }
}

/// Union of all tag values seen for `key`.
pub fn tag_values(manifest: &DatasetManifest, key: &str) -> BTreeSet<String> {
    manifest
        .sequences
        .iter()
        .filter_map(|s| s.tag(key).map(str::to_string))
        .collect()
}
