//! Prediction files: JSON lines of
//! `{sequence_id, frame_index, cx, cy, cz, l, w, h, yaw}`, one per tracked
//! frame. Frame indices count from the template, so a sequence of `n`
//! frames has predictions for `1..n`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrackResult;
use crate::error::{Error, Result};
use crate::geometry::OrientedBox3D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub sequence_id: String,
    pub frame_index: usize,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

/// Serialized predictions, ready to write.
pub fn encode_predictions(results: &[TrackResult]) -> String {
    let mut out = String::new();
    for r in results {
        for (k, b) in r.boxes.iter().enumerate() {
            let rec = PredictionRecord {
                sequence_id: r.sequence_id.clone(),
                frame_index: k + 1,
                cx: b.cx,
                cy: b.cy,
                cz: b.cz,
                l: b.l,
                w: b.w,
                h: b.h,
                yaw: b.yaw,
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
    }
    out
}

pub fn write_predictions(path: &Path, results: &[TrackResult]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(encode_predictions(results).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Reads predictions grouped by sequence (sorted by id). Each sequence's
/// frame indices must be exactly `1..=m` in any line order.
pub fn read_predictions(path: &Path) -> Result<Vec<TrackResult>> {
    let file = fs::File::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut by_seq: BTreeMap<String, BTreeMap<usize, OrientedBox3D>> = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::SchemaMismatch(format!("{}:{}: {e}", path.display(), n + 1)))?;
        let b = OrientedBox3D::new([rec.cx, rec.cy, rec.cz], [rec.l, rec.w, rec.h], rec.yaw)?;
        if by_seq
            .entry(rec.sequence_id.clone())
            .or_default()
            .insert(rec.frame_index, b)
            .is_some()
        {
            return Err(Error::SchemaMismatch(format!(
                "{}:{}: duplicate prediction for {} frame {}",
                path.display(),
                n + 1,
                rec.sequence_id,
                rec.frame_index
            )));
        }
    }
    by_seq
        .into_iter()
        .map(|(id, frames)| {
            let expected: Vec<usize> = (1..=frames.len()).collect();
            if !frames.keys().copied().eq(expected) {
                return Err(Error::LengthMismatch(format!(
                    "{id}: frame indices are not 1..={}",
                    frames.len()
                )));
            }
            Ok(TrackResult {
                sequence_id: id,
                boxes: frames.into_values().collect(),
            })
        })
        .collect()
}
