use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use super::manifest::{write_manifest, write_sequence, DatasetManifest, Provenance, SequenceEntry, MANIFEST_FILE};
use super::TrackingSequence;
use crate::error::{Error, Result};
use crate::weather::{corrupt_sequence, SeverityLevel, SeverityTable, WeatherKind};

/// Which kind × level variants to emit for every clean sequence.
#[derive(Debug, Clone)]
pub struct CorruptionGrid {
    pub kinds: Vec<WeatherKind>,
    pub levels: Vec<SeverityLevel>,
    pub table: SeverityTable,
    pub seed: u64,
    /// Emit the clean sequence too, tagged `weather:clean`.
    pub include_clean: bool,
}

impl CorruptionGrid {
    /// All 3 kinds × 5 levels, plus the clean copy.
    pub fn full(table: SeverityTable, seed: u64) -> Self {
        CorruptionGrid {
            kinds: WeatherKind::ALL.to_vec(),
            levels: SeverityLevel::all().collect(),
            table,
            seed,
            include_clean: true,
        }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(
            self.seed,
            json!({
                "kinds": self.kinds,
                "levels": self.levels,
                "severity_table": self.table,
            }),
        )
    }

    /// Clean copy (if requested) followed by every variant, kind-major.
    pub fn variants(&self, seq: &TrackingSequence) -> Result<Vec<TrackingSequence>> {
        let mut out = Vec::with_capacity(1 + self.kinds.len() * self.levels.len());
        if self.include_clean {
            let mut clean = seq.clone();
            clean.condition_tags.retain(|t| !t.starts_with("weather:"));
            clean.condition_tags.insert("weather:clean".into());
            out.push(clean);
        }
        for &kind in &self.kinds {
            for &level in &self.levels {
                out.push(corrupt_sequence(seq, kind, level, self.seed, &self.table)?);
            }
        }
        Ok(out)
    }

    /// Builds everything in memory.
    pub fn build(&self, name: &str, clean: &[TrackingSequence]) -> Result<(DatasetManifest, Vec<TrackingSequence>)> {
        self.table.validate()?;
        let per_seq: Vec<Vec<TrackingSequence>> = clean.par_iter().map(|s| self.variants(s)).collect::<Result<_>>()?;
        let sequences: Vec<TrackingSequence> = per_seq.into_iter().flatten().collect();
        let entries = sequences.iter().map(SequenceEntry::describe).collect();
        Ok((DatasetManifest::new(name, entries, self.provenance()), sequences))
    }

    /// Builds and writes under `root`, one clean sequence at a time, then
    /// writes the manifest.
    pub fn write(&self, root: &Path, name: &str, clean: &[TrackingSequence]) -> Result<DatasetManifest> {
        self.table.validate()?;
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let entries: Vec<Vec<SequenceEntry>> = clean
            .par_iter()
            .map(|s| {
                self.variants(s)?
                    .iter()
                    .map(|v| {
                        let e = SequenceEntry::describe(v);
                        write_sequence(root, &e, v)?;
                        Ok(e)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let manifest = DatasetManifest::new(name, entries.into_iter().flatten().collect(), self.provenance());
        write_manifest(&root.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

/// Full 3 × 5 grid over `clean` with the given table.
pub fn build_corruption_grid(
    clean: &[TrackingSequence],
    seed: u64,
    table: &SeverityTable,
) -> Result<(DatasetManifest, Vec<TrackingSequence>)> {
    CorruptionGrid::full(table.clone(), seed).build("corruption-grid", clean)
}
