use super::{Frame, TrackingSequence};
use crate::geometry::points_in_box;

pub const DEFAULT_MIN_POINTS: usize = 10;
pub const DEFAULT_MIN_LEN: usize = 5;

/// Drops frames with fewer than `min_points` points inside their
/// ground-truth box (unlabelled frames count as zero), splits each
/// sequence at the dropped frames, and keeps the runs of at least
/// `min_len` frames.
///
/// A sequence that survives whole keeps its id; split runs are named
/// `<id>-<run>`, numbering the kept runs in order.
pub fn filter_real_sequences(raw: &[TrackingSequence], min_points: usize, min_len: usize) -> Vec<TrackingSequence> {
    let mut out = Vec::new();
    for seq in raw {
        let valid: Vec<bool> = seq.frames.iter().map(|f| target_points(f) >= min_points).collect();
        let runs = runs_of_true(&valid);
        let kept: Vec<(usize, usize)> = runs.into_iter().filter(|(s, e)| e - s >= min_len.max(1)).collect();
        if kept.len() == 1 && kept[0] == (0, seq.frames.len()) {
            out.push(seq.clone());
            continue;
        }
        for (run, (s, e)) in kept.into_iter().enumerate() {
            out.push(TrackingSequence {
                sequence_id: format!("{}-{run}", seq.sequence_id),
                category: seq.category,
                frames: seq.frames[s..e].to_vec(),
                condition_tags: seq.condition_tags.clone(),
            });
        }
    }
    out
}

/// Maximal `[start, end)` runs of `true`.
fn runs_of_true(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, flags.len()));
    }
    runs
}

/// Counts of a filtering pass, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterSummary {
    pub input_sequences: usize,
    pub input_frames: usize,
    pub kept_intact: usize,
    pub split_outputs: usize,
    pub output_sequences: usize,
    pub output_frames: usize,
    pub dropped_sequences: usize,
}

pub fn summarize(raw: &[TrackingSequence], filtered: &[TrackingSequence]) -> FilterSummary {
    let intact = filtered
        .iter()
        .filter(|f| raw.iter().any(|r| r.sequence_id == f.sequence_id))
        .count();
    let parents_with_output = raw
        .iter()
        .filter(|r| {
            filtered
                .iter()
                .any(|f| f.sequence_id == r.sequence_id || f.sequence_id.starts_with(&format!("{}-", r.sequence_id)))
        })
        .count();
    FilterSummary {
        input_sequences: raw.len(),
        input_frames: raw.iter().map(TrackingSequence::len).sum(),
        kept_intact: intact,
        split_outputs: filtered.len() - intact,
        output_sequences: filtered.len(),
        output_frames: filtered.iter().map(TrackingSequence::len).sum(),
        dropped_sequences: raw.len() - parents_with_output,
    }
}

/// Points inside the frame's ground-truth box; zero when unlabelled.
pub fn target_points(f: &Frame) -> usize {
    f.gt_box.map_or(0, |b| points_in_box(&f.cloud, &b).0)
}
