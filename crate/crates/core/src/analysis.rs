//! Failure analysis along three axes: target distance, template shape
//! corruption and target shape corruption, each measured against the IoU
//! lost between a clean run and a corrupted run of the same tracker.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TrackingSequence;
use crate::error::{Error, Result};
use crate::eval::TrackResult;
use crate::geometry::{hausdorff_distance, iou_with, target_distance, IouMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedFrameRecord {
    /// Id of the corrupted sequence.
    pub sequence_id: String,
    pub frame_index: usize,
    pub clean_iou: f64,
    pub adverse_iou: f64,
    pub target_distance: f64,
    pub template_hausdorff: f64,
    pub target_hausdorff: f64,
}

impl PairedFrameRecord {
    /// Positive when the corrupted run did worse.
    pub fn deviation(&self) -> f64 {
        self.clean_iou - self.adverse_iou
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DropCounts {
    /// Frames of sequences whose clean or corrupted template crop was empty.
    pub empty_template: usize,
    /// Frames whose clean or corrupted target crop was empty.
    pub empty_target: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.empty_template + self.empty_target
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRecords {
    pub records: Vec<PairedFrameRecord>,
    pub dropped: DropCounts,
}

/// Pairs every corrupted sequence with its clean source (its `source` tag,
/// or the same id when untagged) frame by frame. Crops use the clean
/// ground-truth box.
pub fn extract_paired_records(
    clean_results: &[TrackResult],
    adverse_results: &[TrackResult],
    clean: &[TrackingSequence],
    adverse: &[TrackingSequence],
    mode: IouMode,
) -> Result<PairedRecords> {
    let clean_seq: HashMap<&str, &TrackingSequence> = clean.iter().map(|s| (s.sequence_id.as_str(), s)).collect();
    let clean_res: HashMap<&str, &TrackResult> = clean_results.iter().map(|r| (r.sequence_id.as_str(), r)).collect();
    let adverse_res: HashMap<&str, &TrackResult> =
        adverse_results.iter().map(|r| (r.sequence_id.as_str(), r)).collect();
    if adverse_res.len() != adverse.len()
        || adverse
            .iter()
            .any(|s| !adverse_res.contains_key(s.sequence_id.as_str()))
    {
        return Err(Error::KeyMismatch(
            "corrupted results do not cover the corrupted sequences exactly".into(),
        ));
    }

    let per_seq: Vec<(Vec<PairedFrameRecord>, DropCounts)> = adverse
        .par_iter()
        .map(|adv| {
            let src = adv.tag("source").unwrap_or(&adv.sequence_id);
            let key_err = |what: &str| Error::KeyMismatch(format!("{}: {what} {src:?}", adv.sequence_id));
            let cs = clean_seq.get(src).ok_or_else(|| key_err("no clean sequence"))?;
            let cr = clean_res.get(src).ok_or_else(|| key_err("no clean result for"))?;
            let ar = adverse_res[adv.sequence_id.as_str()];
            if cs.len() != adv.len() || cr.boxes.len() + 1 != cs.len() || ar.boxes.len() + 1 != adv.len() {
                return Err(key_err("frame count differs from"));
            }
            let gt = cs.gt_boxes()?;
            let mut drops = DropCounts::default();
            let t_clean = cs.frames[0].cloud.crop(&gt[0]);
            let t_adv = adv.frames[0].cloud.crop(&gt[0]);
            if t_clean.is_empty() || t_adv.is_empty() {
                drops.empty_template = adv.len() - 1;
                return Ok((Vec::new(), drops));
            }
            let template_hausdorff = hausdorff_distance(&t_clean, &t_adv)?;
            let mut records = Vec::with_capacity(adv.len() - 1);
            for k in 1..adv.len() {
                let c = cs.frames[k].cloud.crop(&gt[k]);
                let a = adv.frames[k].cloud.crop(&gt[k]);
                if c.is_empty() || a.is_empty() {
                    drops.empty_target += 1;
                    continue;
                }
                records.push(PairedFrameRecord {
                    sequence_id: adv.sequence_id.clone(),
                    frame_index: k,
                    clean_iou: iou_with(mode, &cr.boxes[k - 1], &gt[k]),
                    adverse_iou: iou_with(mode, &ar.boxes[k - 1], &gt[k]),
                    target_distance: target_distance(&gt[k], &cs.frames[k].cloud.sensor_origin),
                    template_hausdorff,
                    target_hausdorff: hausdorff_distance(&c, &a)?,
                });
            }
            Ok((records, drops))
        })
        .collect::<Result<_>>()?;

    let mut dropped = DropCounts::default();
    let mut records = Vec::new();
    for (r, d) in per_seq {
        records.extend(r);
        dropped.empty_template += d.empty_template;
        dropped.empty_target += d.empty_target;
    }
    Ok(PairedRecords { records, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAxis {
    Distance,
    TemplateCorruption,
    TargetCorruption,
}

impl BinAxis {
    pub const ALL: [BinAxis; 3] = [
        BinAxis::Distance,
        BinAxis::TemplateCorruption,
        BinAxis::TargetCorruption,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BinAxis::Distance => "distance",
            BinAxis::TemplateCorruption => "template_corruption",
            BinAxis::TargetCorruption => "target_corruption",
        }
    }

    pub fn value(&self, r: &PairedFrameRecord) -> f64 {
        match self {
            BinAxis::Distance => r.target_distance,
            BinAxis::TemplateCorruption => r.template_hausdorff,
            BinAxis::TargetCorruption => r.target_hausdorff,
        }
    }
}

impl fmt::Display for BinAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BinAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(BinAxis::Distance),
            "template" | "template_corruption" => Ok(BinAxis::TemplateCorruption),
            "target" | "target_corruption" => Ok(BinAxis::TargetCorruption),
            other => Err(Error::InvalidConfig(format!("unknown bin axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub axis: BinAxis,
    pub edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(axis: BinAxis, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidConfig(format!("{axis} bins need at least 2 edges")));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "{axis} bin edges must be finite and strictly increasing"
            )));
        }
        Ok(BinSpec { axis, edges })
    }

    /// Edges `lo, lo + step, …, hi`.
    pub fn stepped(axis: BinAxis, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi > lo) {
            return Err(Error::InvalidConfig(format!("{axis} bins need lo < hi and step > 0")));
        }
        let n = ((hi - lo) / step).round() as usize;
        if ((lo + n as f64 * step) - hi).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "{axis}: step {step} does not divide [{lo}, {hi}]"
            )));
        }
        BinSpec::new(axis, (0..=n).map(|i| lo + i as f64 * step).collect())
    }

    /// Distance 0..50 m in 10 m bins; Hausdorff axes 0..3.5 m in 0.25 m bins.
    pub fn default_for(axis: BinAxis) -> Self {
        match axis {
            BinAxis::Distance => BinSpec::stepped(axis, 0.0, 50.0, 10.0),
            _ => BinSpec::stepped(axis, 0.0, 3.5, 0.25),
        }
        .expect("default bins are valid")
    }

    pub fn bin_count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Half-open bin `[e_k, e_{k+1})` holding `v`.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.edges[0]) || v >= self.edges[self.edges.len() - 1] {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= v) - 1)
    }

    pub fn label(&self, bin: usize) -> String {
        format!("{}-{}", self.edges[bin], self.edges[bin + 1])
    }
}

/// `axis=lo:hi:step` or `axis=e0,e1,…`.
impl FromStr for BinSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("bin spec {s:?} is not axis=edges")))?;
        let axis: BinAxis = axis.trim().parse()?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number {t:?} in bin spec {s:?}")))
        };
        let parts: Vec<&str> = rest.split(':').collect();
        match parts.as_slice() {
            [lo, hi, step] => BinSpec::stepped(axis, num(lo)?, num(hi)?, num(step)?),
            [list] => BinSpec::new(axis, list.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(Error::InvalidConfig(format!(
                "bin spec {s:?} is not axis=lo:hi:step or axis=e0,e1,..."
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    /// `None` for an empty bin.
    pub mean_deviation: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDeviation {
    pub axis: BinAxis,
    pub bins: Vec<BinStat>,
    /// Records whose axis value fell outside every bin.
    pub out_of_range: usize,
}

pub fn binned_iou_deviation(records: &[PairedFrameRecord], spec: &BinSpec) -> BinnedDeviation {
    let mut sums = vec![0.0; spec.bin_count()];
    let mut counts = vec![0usize; spec.bin_count()];
    let mut out_of_range = 0;
    for r in records {
        match spec.bin_of(spec.axis.value(r)) {
            Some(b) => {
                sums[b] += r.deviation();
                counts[b] += 1;
            }
            None => out_of_range += 1,
        }
    }
    BinnedDeviation {
        axis: spec.axis,
        bins: (0..spec.bin_count())
            .map(|b| BinStat {
                lo: spec.edges[b],
                hi: spec.edges[b + 1],
                mean_deviation: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
                count: counts[b],
            })
            .collect(),
        out_of_range,
    }
}

/// One CSV line: `axis, bin_lo, bin_hi, mean_deviation, count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub axis: BinAxis,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mean_deviation: Option<f64>,
    pub count: usize,
}

pub fn encode_analysis_csv(binned: &[BinnedDeviation]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in binned {
        for s in &b.bins {
            w.serialize(AnalysisRow {
                axis: b.axis,
                bin_lo: s.lo,
                bin_hi: s.hi,
                mean_deviation: s.mean_deviation,
                count: s.count,
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_analysis_csv(binned: &[BinnedDeviation], path: &Path) -> Result<()> {
    fs::write(path, encode_analysis_csv(binned)?).map_err(|e| Error::io(path, e))
}

pub fn read_analysis_csv(path: &Path) -> Result<Vec<AnalysisRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
