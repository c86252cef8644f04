//! One-pass evaluation and robustness statistics.
//!
//! Success is the area under the overlap-threshold curve over `[0, 1]`,
//! which equals the mean IoU. Precision is the area under the
//! center-error curve over `[0, 2 m]`, normalized, which equals
//! `mean(max(0, 1 − e / 2))`. Both are percentages, pooled over frames.

mod io;
mod report;
mod tracker;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{encode_predictions, read_predictions, write_predictions, PredictionRecord};
pub use report::{
    build_report, encode_report_csv, evaluate_conditions, read_report_csv, report_rows, write_report_csv,
    write_report_json, EvaluationSummary, LevelScore, MetricReport, ReportRow,
};
pub use tracker::{
    run_reference_tracker, search_region, CentroidShift, ConstantPosition, Tracker, TrackerKind, TrackingRun,
    DEFAULT_SEARCH_MARGIN,
};

use crate::error::{Error, Result};
use crate::geometry::{iou_with, IouMode, OrientedBox3D};

/// Center-error range of the precision curve, meters.
pub const PRECISION_MAX_ERROR: f64 = 2.0;

/// Predicted boxes for frames `1..n` of one sequence (frame 0 is the template).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub sequence_id: String,
    pub boxes: Vec<OrientedBox3D>,
}

/// Per-sequence ground-truth boxes, template frame included.
pub type GroundTruth = BTreeMap<String, Vec<Option<OrientedBox3D>>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpeScore {
    pub success: f64,
    pub precision: f64,
    pub frames: usize,
}

pub fn center_error(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    let (p, q) = (a.center(), b.center());
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

pub fn precision_credit(center_error: f64) -> f64 {
    (1.0 - center_error / PRECISION_MAX_ERROR).max(0.0)
}

/// Scores `results` against `gt`. Every result must name a ground-truth
/// sequence and vice versa, each exactly once.
pub fn one_pass_evaluate(results: &[TrackResult], gt: &GroundTruth, mode: IouMode) -> Result<OpeScore> {
    let mut seen = BTreeSet::new();
    for r in results {
        if !gt.contains_key(&r.sequence_id) {
            return Err(Error::SequenceMismatch(format!(
                "no ground truth for {:?}",
                r.sequence_id
            )));
        }
        if !seen.insert(r.sequence_id.as_str()) {
            return Err(Error::SequenceMismatch(format!(
                "{:?} has more than one result",
                r.sequence_id
            )));
        }
    }
    if let Some(missing) = gt.keys().find(|k| !seen.contains(k.as_str())) {
        return Err(Error::SequenceMismatch(format!("no result for {missing:?}")));
    }
    let sums: Vec<(f64, f64, usize)> = results
        .par_iter()
        .map(|r| {
            let boxes = &gt[&r.sequence_id];
            if r.boxes.len() + 1 != boxes.len() {
                return Err(Error::LengthMismatch(format!(
                    "{}: {} predictions for {} frames",
                    r.sequence_id,
                    r.boxes.len(),
                    boxes.len()
                )));
            }
            let mut s = (0.0, 0.0, 0);
            for (k, pred) in r.boxes.iter().enumerate() {
                let g = boxes[k + 1].as_ref().ok_or_else(|| Error::InvalidSequence {
                    id: r.sequence_id.clone(),
                    reason: format!("frame {} has no ground-truth box", k + 1),
                })?;
                s.0 += iou_with(mode, pred, g);
                s.1 += precision_credit(center_error(pred, g));
                s.2 += 1;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let (o, p, n) = sums
        .iter()
        .fold((0.0, 0.0, 0), |acc, s| (acc.0 + s.0, acc.1 + s.1, acc.2 + s.2));
    if n == 0 {
        return Err(Error::InsufficientValues { needed: 1, got: 0 });
    }
    Ok(OpeScore {
        success: 100.0 * o / n as f64,
        precision: 100.0 * p / n as f64,
        frames: n,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `mean(levels) / clean`.
pub fn retained_fraction(clean: f64, levels: &[f64]) -> Result<f64> {
    if !(clean > 0.0 && clean.is_finite()) {
        return Err(Error::NonPositiveClean(clean));
    }
    if levels.is_empty() {
        return Err(Error::InsufficientValues { needed: 1, got: 0 });
    }
    Ok(mean(levels) / clean)
}

/// `1 − mean(levels) / clean`; negative when the corrupted runs beat clean.
pub fn degradation_rate(clean: f64, levels: &[f64]) -> Result<f64> {
    Ok(1.0 - retained_fraction(clean, levels)?)
}

/// `max − min`.
pub fn range_stat(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientValues { needed: 1, got: 0 });
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Sample standard deviation (divisor `n − 1`).
pub fn std_dev(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientValues {
            needed: 2,
            got: values.len(),
        });
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}
