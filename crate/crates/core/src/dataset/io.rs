//! Cloud `.bin` files and per-sequence label sidecars.
//!
//! A cloud file is a headerless run of little-endian `f32` quadruples
//! `(x, y, z, intensity)`, the KITTI velodyne layout. A label sidecar is
//! JSON lines, one object per labelled frame:
//! `{"frame_index":0,"cx":..,"cy":..,"cz":..,"l":..,"w":..,"h":..,"yaw":..}`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox3D, Point3, PointCloud};

pub fn encode_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    bytes
}

pub fn decode_cloud(bytes: &[u8]) -> Option<PointCloud> {
    if !bytes.len().is_multiple_of(16) {
        return None;
    }
    let points = bytes
        .chunks_exact(16)
        .map(|c| {
            let f = |k: usize| f64::from(f32::from_le_bytes([c[4 * k], c[4 * k + 1], c[4 * k + 2], c[4 * k + 3]]));
            Point3::new(f(0), f(1), f(2), f(3))
        })
        .collect();
    Some(PointCloud::new(points))
}

pub fn read_cloud_bin(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    decode_cloud(&bytes).ok_or_else(|| Error::TruncatedFile {
        path: path.to_path_buf(),
        len: bytes.len() as u64,
    })
}

pub fn write_cloud_bin(path: &Path, cloud: &PointCloud) -> Result<()> {
    fs::write(path, encode_cloud(cloud)).map_err(|e| Error::io(path, e))
}

/// One line of a label sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub frame_index: usize,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

impl LabelRecord {
    pub fn new(frame_index: usize, b: &OrientedBox3D) -> Self {
        LabelRecord {
            frame_index,
            cx: b.cx,
            cy: b.cy,
            cz: b.cz,
            l: b.l,
            w: b.w,
            h: b.h,
            yaw: b.yaw,
        }
    }

    pub fn to_box(&self) -> Result<OrientedBox3D> {
        OrientedBox3D::new([self.cx, self.cy, self.cz], [self.l, self.w, self.h], self.yaw)
    }
}

pub fn write_labels(path: &Path, boxes: &[Option<OrientedBox3D>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (i, b) in boxes.iter().enumerate() {
        if let Some(b) = b {
            let line = serde_json::to_string(&LabelRecord::new(i, b)).expect("label serializes");
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a sidecar into per-frame boxes for a sequence of `frame_count` frames.
pub fn read_labels(path: &Path, frame_count: usize) -> Result<Vec<Option<OrientedBox3D>>> {
    let file = fs::File::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut boxes = vec![None; frame_count];
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line)
            .map_err(|e| Error::SchemaMismatch(format!("{}:{}: {e}", path.display(), n + 1)))?;
        let slot = boxes.get_mut(rec.frame_index).ok_or_else(|| Error::CountMismatch {
            what: format!("{} frame_index", path.display()),
            expected: frame_count,
            found: rec.frame_index + 1,
        })?;
        *slot = Some(rec.to_box()?);
    }
    Ok(boxes)
}
