pub mod analyze;
pub mod augment;
pub mod corrupt;
pub mod eval;
pub mod filter;
pub mod lgcm_check;
pub mod synth;
pub mod track;

use std::path::{Path, PathBuf};

use clap::ValueEnum;

use stormbench::dataset::manifest::{load_sequences, manifest_root, read_manifest};
use stormbench::{DatasetManifest, IouMode, StormConfig, TrackingSequence};

use crate::error::{CliError, CliResult};

pub struct Context {
    pub seed: Option<u64>,
}

impl Context {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IouArg {
    #[value(name = "3d")]
    Full3d,
    Bev,
}

impl From<IouArg> for IouMode {
    fn from(a: IouArg) -> Self {
        match a {
            IouArg::Full3d => IouMode::Full3d,
            IouArg::Bev => IouMode::Bev,
        }
    }
}

pub fn load_config(path: Option<&Path>) -> CliResult<StormConfig> {
    match path {
        Some(p) => StormConfig::load(p).map_err(|e| match e {
            stormbench::Error::Unreadable { .. } => CliError::Usage(e.to_string()),
            e => e.into(),
        }),
        None => Ok(StormConfig::default()),
    }
}

pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(manifest_path: &Path) -> CliResult<Self> {
        let manifest = read_manifest(manifest_path)?;
        log::info!(
            "{}: {} sequences, {} frames",
            manifest_path.display(),
            manifest.sequences.len(),
            manifest.total_frames()
        );
        Ok(Dataset {
            root: manifest_root(manifest_path),
            manifest,
        })
    }

    pub fn sequences(&self) -> CliResult<Vec<TrackingSequence>> {
        Ok(load_sequences(&self.root, &self.manifest)?)
    }
}

/// `96360` as `96,360`.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}
