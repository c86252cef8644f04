//! TOML configuration. Every section is optional and every key falls back
//! to its default; unknown keys are rejected.
//!
//! ```toml
//! [weather]
//! fog_mor = [200.0, 100.0, 50.0, 40.0, 30.0]
//! rain_rate = [5.0, 10.0, 20.0, 35.0, 55.0]
//! detection_threshold = 0.02
//!
//! [randomization]
//! n_max = 0.2        # fraction of the cloud, or an absolute count like 40
//! r_max = 0.3
//! jitter_a = 0.05
//!
//! [lgcm]
//! m = 128
//! radius = 0.3
//! k = 16
//! stop_aux = false
//!
//! [scene]
//! frames = 10
//! clutter = 200
//! trajectory = { kind = "linear", velocity = [0.2, 0.0, 0.0] }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SceneSpec;
use crate::error::{Error, Result};
use crate::lgcm::LgcmConfig;
use crate::randomize::RandomizationConfig;
use crate::weather::SeverityTable;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StormConfig {
    pub weather: SeverityTable,
    pub randomization: RandomizationConfig,
    pub lgcm: LgcmConfig,
    pub scene: SceneSpec,
}

impl StormConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StormConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        StormConfig::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.weather.validate()?;
        self.randomization.validate()?;
        self.lgcm.validate()?;
        self.scene.validate()
    }
}
