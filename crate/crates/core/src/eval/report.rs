//! Robustness reports: per-level scores against a clean baseline, with
//! degradation rate, range and standard deviation for both metrics.
//!
//! CSV columns: `condition, level, success, precision, dr_s, dr_p,
//! range_s, range_p, sd_s, sd_p`. Each condition has a `clean` row, one
//! row per level and a `mean` row carrying the statistics; the statistic
//! columns are blank elsewhere.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{degradation_rate, one_pass_evaluate, range_stat, std_dev, GroundTruth, OpeScore, TrackResult};
use crate::dataset::SequenceEntry;
use crate::error::{Error, Result};
use crate::geometry::IouMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub level: u8,
    pub success: f64,
    pub precision: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub condition: String,
    pub clean: OpeScore,
    pub levels: Vec<LevelScore>,
    pub dr_success: f64,
    pub dr_precision: f64,
    pub range_success: f64,
    pub range_precision: f64,
    pub sd_success: f64,
    pub sd_precision: f64,
    /// False with a single level, where the standard deviation is reported as 0.
    pub sd_defined: bool,
}

impl MetricReport {
    pub fn mean_success(&self) -> f64 {
        self.levels.iter().map(|l| l.success).sum::<f64>() / self.levels.len() as f64
    }

    pub fn mean_precision(&self) -> f64 {
        self.levels.iter().map(|l| l.precision).sum::<f64>() / self.levels.len() as f64
    }
}

pub fn build_report(condition: &str, clean: &OpeScore, levels: &[LevelScore]) -> Result<MetricReport> {
    let s: Vec<f64> = levels.iter().map(|l| l.success).collect();
    let p: Vec<f64> = levels.iter().map(|l| l.precision).collect();
    let sd_defined = levels.len() >= 2;
    let sd = |v: &[f64]| if sd_defined { std_dev(v) } else { Ok(0.0) };
    Ok(MetricReport {
        condition: condition.to_string(),
        clean: *clean,
        levels: levels.to_vec(),
        dr_success: degradation_rate(clean.success, &s)?,
        dr_precision: degradation_rate(clean.precision, &p)?,
        range_success: range_stat(&s)?,
        range_precision: range_stat(&p)?,
        sd_success: sd(&s)?,
        sd_precision: sd(&p)?,
        sd_defined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    /// All sequences pooled.
    pub overall: OpeScore,
    /// Sequences tagged `weather:clean` or carrying no weather tag.
    pub clean: Option<OpeScore>,
    /// One report per weather kind, ordered by name.
    pub reports: Vec<MetricReport>,
}

/// Splits sequences by their `weather` and `level` tags and scores each
/// group; every weather kind is compared against the pooled clean group.
pub fn evaluate_conditions(
    results: &[TrackResult],
    gt: &GroundTruth,
    entries: &[SequenceEntry],
    mode: IouMode,
) -> Result<EvaluationSummary> {
    let by_id: HashMap<&str, &TrackResult> = results.iter().map(|r| (r.sequence_id.as_str(), r)).collect();
    let overall = one_pass_evaluate(results, gt, mode)?;

    let mut clean_ids = Vec::new();
    let mut conditions: BTreeMap<String, BTreeMap<u8, Vec<&str>>> = BTreeMap::new();
    for e in entries {
        match e.tag("weather") {
            None | Some("clean") => clean_ids.push(e.id.as_str()),
            Some(kind) => {
                let level: u8 = e.tag("level").and_then(|l| l.parse().ok()).ok_or_else(|| {
                    Error::SchemaMismatch(format!("{}: weather tag without a numeric level tag", e.id))
                })?;
                conditions
                    .entry(kind.to_string())
                    .or_default()
                    .entry(level)
                    .or_default()
                    .push(&e.id);
            }
        }
    }

    let score = |ids: &[&str]| -> Result<OpeScore> {
        let rs: Vec<TrackResult> = ids
            .iter()
            .map(|id| {
                by_id
                    .get(id)
                    .map(|r| (*r).clone())
                    .ok_or_else(|| Error::SequenceMismatch(format!("no result for {id:?}")))
            })
            .collect::<Result<_>>()?;
        let sub: GroundTruth = ids
            .iter()
            .map(|id| {
                gt.get(*id)
                    .map(|g| (id.to_string(), g.clone()))
                    .ok_or_else(|| Error::SequenceMismatch(format!("no ground truth for {id:?}")))
            })
            .collect::<Result<_>>()?;
        one_pass_evaluate(&rs, &sub, mode)
    };

    let clean = if clean_ids.is_empty() {
        None
    } else {
        Some(score(&clean_ids)?)
    };
    let mut reports = Vec::new();
    if !conditions.is_empty() {
        let base = clean.ok_or_else(|| Error::SequenceMismatch("corrupted sequences but no clean baseline".into()))?;
        for (kind, levels) in &conditions {
            let scores: Vec<LevelScore> = levels
                .iter()
                .map(|(&level, ids)| {
                    let s = score(ids)?;
                    Ok(LevelScore {
                        level,
                        success: s.success,
                        precision: s.precision,
                        frames: s.frames,
                    })
                })
                .collect::<Result<_>>()?;
            reports.push(build_report(kind, &base, &scores)?);
        }
    }
    Ok(EvaluationSummary {
        overall,
        clean,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: String,
    pub level: String,
    pub success: f64,
    pub precision: f64,
    pub dr_s: Option<f64>,
    pub dr_p: Option<f64>,
    pub range_s: Option<f64>,
    pub range_p: Option<f64>,
    pub sd_s: Option<f64>,
    pub sd_p: Option<f64>,
}

impl ReportRow {
    fn plain(condition: &str, level: String, success: f64, precision: f64) -> Self {
        ReportRow {
            condition: condition.to_string(),
            level,
            success,
            precision,
            dr_s: None,
            dr_p: None,
            range_s: None,
            range_p: None,
            sd_s: None,
            sd_p: None,
        }
    }
}

pub fn report_rows(summary: &EvaluationSummary) -> Vec<ReportRow> {
    if summary.reports.is_empty() {
        let o = &summary.overall;
        return vec![ReportRow::plain("all", "all".into(), o.success, o.precision)];
    }
    let mut rows = Vec::new();
    for r in &summary.reports {
        rows.push(ReportRow::plain(
            &r.condition,
            "clean".into(),
            r.clean.success,
            r.clean.precision,
        ));
        for l in &r.levels {
            rows.push(ReportRow::plain(
                &r.condition,
                l.level.to_string(),
                l.success,
                l.precision,
            ));
        }
        rows.push(ReportRow {
            dr_s: Some(r.dr_success),
            dr_p: Some(r.dr_precision),
            range_s: Some(r.range_success),
            range_p: Some(r.range_precision),
            sd_s: Some(r.sd_success),
            sd_p: Some(r.sd_precision),
            ..ReportRow::plain(&r.condition, "mean".into(), r.mean_success(), r.mean_precision())
        });
    }
    rows
}

pub fn encode_report_csv(summary: &EvaluationSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in report_rows(summary) {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_report_csv(path: &Path, summary: &EvaluationSummary) -> Result<()> {
    fs::write(path, encode_report_csv(summary)?).map_err(|e| Error::io(path, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_report_json(path: &Path, summary: &EvaluationSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
