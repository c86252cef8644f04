//! Rain, fog and snow corruption of LiDAR frames at five severity levels.
//!
//! Both models are physically shaped surrogates driven by the usual
//! knobs (meteorological optical range for fog, precipitation rate for
//! rain and snow). Rays are reconstructed as sensor-origin to point
//! segments.
//!
//! Every random draw is made per point in a fixed order on its own
//! ChaCha stream, whatever the severity, so a given seed couples all five
//! levels: a point lost at level `k` is also lost at every level above.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TrackingSequence;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::seed::{derive_seed, stream_rng};

/// Contrast threshold of the MOR definition, `ln(1/0.05)`.
pub const MOR_CONTRAST_LN: f64 = 2.996;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherKind {
    Rain,
    Fog,
    Snow,
}

impl WeatherKind {
    pub const ALL: [WeatherKind; 3] = [WeatherKind::Rain, WeatherKind::Fog, WeatherKind::Snow];

    pub fn as_str(&self) -> &'static str {
        match self {
            WeatherKind::Rain => "rain",
            WeatherKind::Fog => "fog",
            WeatherKind::Snow => "snow",
        }
    }
}

impl fmt::Display for WeatherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeatherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rain" => Ok(WeatherKind::Rain),
            "fog" => Ok(WeatherKind::Fog),
            "snow" => Ok(WeatherKind::Snow),
            other => Err(Error::InvalidConfig(format!("unknown weather kind {other:?}"))),
        }
    }
}

/// Severity level 1 (lightest) to 5 (heaviest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SeverityLevel(u8);

impl SeverityLevel {
    pub fn new(level: u8) -> Result<Self> {
        if (1..=5).contains(&level) {
            Ok(SeverityLevel(level))
        } else {
            Err(Error::InvalidConfig(format!("severity level {level} outside 1..=5")))
        }
    }

    pub fn all() -> impl Iterator<Item = SeverityLevel> {
        (1..=5).map(SeverityLevel)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl TryFrom<u8> for SeverityLevel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        SeverityLevel::new(v)
    }
}

impl From<SeverityLevel> for u8 {
    fn from(l: SeverityLevel) -> u8 {
        l.0
    }
}

impl fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical constants shared by all levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherModel {
    /// Intensity below which an attenuated echo is lost.
    pub detection_threshold: f64,
    /// Probability that a lost fog echo is replaced by backscatter.
    pub scatter_probability: f64,
    /// Closest range of any backscatter / airborne point, meters.
    pub r_min: f64,
    /// Outer radius of the near-sensor noise halo, meters.
    pub r_halo: f64,
    /// Recorded intensities below this are treated as this reflectance in
    /// the fog detection test.
    pub reflectance_floor: f64,
    /// Rain extinction `alpha = c_rain * rate^0.6` (1/m).
    pub c_rain: f64,
    pub c_snow: f64,
    /// Range jitter std per mm/hr of precipitation, meters.
    pub range_noise_per_rate: f64,
    /// Expected airborne scatter points per mm/hr.
    pub scatter_points_per_rate: f64,
    pub scatter_max_intensity: f64,
    /// Elevation band of airborne scatter, radians.
    pub scatter_elevation: [f64; 2],
}

impl Default for WeatherModel {
    fn default() -> Self {
        WeatherModel {
            detection_threshold: 0.02,
            scatter_probability: 0.3,
            r_min: 1.5,
            r_halo: 25.0,
            reflectance_floor: 0.1,
            c_rain: 0.002,
            c_snow: 0.003,
            range_noise_per_rate: 0.002,
            scatter_points_per_rate: 4.0,
            scatter_max_intensity: 0.05,
            scatter_elevation: [-0.35, 0.05],
        }
    }
}

impl WeatherModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let finite = [
            self.detection_threshold,
            self.scatter_probability,
            self.r_min,
            self.r_halo,
            self.reflectance_floor,
            self.c_rain,
            self.c_snow,
            self.range_noise_per_rate,
            self.scatter_points_per_rate,
            self.scatter_max_intensity,
            self.scatter_elevation[0],
            self.scatter_elevation[1],
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("weather model values must be finite");
        }
        if !(0.0..=1.0).contains(&self.scatter_probability) {
            return bad("scatter_probability must lie in [0, 1]");
        }
        if self.detection_threshold < 0.0 || self.reflectance_floor < 0.0 {
            return bad("detection_threshold and reflectance_floor must be non-negative");
        }
        if !(self.r_min > 0.0 && self.r_halo > self.r_min) {
            return bad("need 0 < r_min < r_halo");
        }
        if self.c_rain < 0.0
            || self.c_snow < 0.0
            || self.range_noise_per_rate < 0.0
            || self.scatter_points_per_rate < 0.0
        {
            return bad("rate coefficients must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.scatter_max_intensity) {
            return bad("scatter_max_intensity must lie in [0, 1]");
        }
        if self.scatter_elevation[0] > self.scatter_elevation[1] {
            return bad("scatter_elevation must be [low, high]");
        }
        Ok(())
    }
}

/// Level → parameter table, loadable from the `[weather]` section of a
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeverityTable {
    /// Meteorological optical range per level, meters. Strictly decreasing.
    pub fog_mor: [f64; 5],
    /// Rainfall rate per level, mm/hr. Strictly increasing.
    pub rain_rate: [f64; 5],
    /// Snowfall rate (water equivalent) per level, mm/hr. Strictly increasing.
    pub snow_rate: [f64; 5],
    #[serde(flatten)]
    pub model: WeatherModel,
}

impl Default for SeverityTable {
    fn default() -> Self {
        SeverityTable {
            fog_mor: [200.0, 100.0, 50.0, 40.0, 30.0],
            rain_rate: [5.0, 10.0, 20.0, 35.0, 55.0],
            snow_rate: [5.0, 10.0, 20.0, 35.0, 55.0],
            model: WeatherModel::default(),
        }
    }
}

impl SeverityTable {
    pub fn validate(&self) -> Result<()> {
        let strictly = |v: &[f64; 5], inc: bool| v.windows(2).all(|w| if inc { w[0] < w[1] } else { w[0] > w[1] });
        if !strictly(&self.fog_mor, false) || self.fog_mor.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidConfig(
                "fog_mor must be positive and strictly decreasing".into(),
            ));
        }
        for (name, v) in [("rain_rate", &self.rain_rate), ("snow_rate", &self.snow_rate)] {
            if !strictly(v, true) || v.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative and strictly increasing"
                )));
            }
        }
        self.model.validate()
    }

    pub fn config(&self, kind: WeatherKind, level: SeverityLevel, seed: u64) -> CorruptionConfig {
        let (fog_mor, precip_rate) = match kind {
            WeatherKind::Fog => (Some(self.fog_mor[level.slot()]), None),
            WeatherKind::Rain => (None, Some(self.rain_rate[level.slot()])),
            WeatherKind::Snow => (None, Some(self.snow_rate[level.slot()])),
        };
        CorruptionConfig {
            kind,
            level,
            fog_mor,
            precip_rate,
            seed,
            model: self.model,
        }
    }
}

/// Everything `corrupt_frame` needs for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub kind: WeatherKind,
    pub level: SeverityLevel,
    /// Fog only.
    pub fog_mor: Option<f64>,
    /// Rain and snow only, mm/hr.
    pub precip_rate: Option<f64>,
    pub seed: u64,
    pub model: WeatherModel,
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.fog_mor, self.precip_rate) {
            (WeatherKind::Fog, Some(mor), None) if mor > 0.0 => {}
            (WeatherKind::Rain | WeatherKind::Snow, None, Some(rate)) if rate.is_finite() && rate >= 0.0 => {}
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "{} needs {} (fog_mor = {:?}, precip_rate = {:?})",
                    self.kind,
                    if self.kind == WeatherKind::Fog {
                        "a positive fog_mor only"
                    } else {
                        "a non-negative precip_rate only"
                    },
                    self.fog_mor,
                    self.precip_rate
                )))
            }
        }
        self.model.validate()
    }
}

/// Per-frame accounting of what the corruption did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorruptionStats {
    pub input: usize,
    /// Original points still present (possibly moved or dimmed).
    pub retained: usize,
    /// Original points removed without replacement.
    pub dropped: usize,
    /// Original points replaced by a fog backscatter return.
    pub backscattered: usize,
    /// Airborne precipitation returns added.
    pub injected: usize,
}

impl CorruptionStats {
    pub fn retained_fraction(&self) -> f64 {
        if self.input == 0 {
            1.0
        } else {
            self.retained as f64 / self.input as f64
        }
    }
}

pub fn corrupt_frame(cloud: &PointCloud, config: &CorruptionConfig) -> Result<PointCloud> {
    corrupt_frame_with_stats(cloud, config).map(|(c, _)| c)
}

pub fn corrupt_frame_with_stats(
    cloud: &PointCloud,
    config: &CorruptionConfig,
) -> Result<(PointCloud, CorruptionStats)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    config.validate()?;
    match config.kind {
        WeatherKind::Fog => Ok(fog(cloud, config.fog_mor.unwrap_or(f64::INFINITY), config)),
        WeatherKind::Rain | WeatherKind::Snow => Ok(precipitation(cloud, config.precip_rate.unwrap_or(0.0), config)),
    }
}

struct Ray {
    origin: [f64; 3],
    dir: [f64; 3],
    range: f64,
}

impl Ray {
    fn to(origin: &Point3, p: &Point3) -> Ray {
        let d = [p.x - origin.x, p.y - origin.y, p.z - origin.z];
        let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let dir = if range > 0.0 {
            [d[0] / range, d[1] / range, d[2] / range]
        } else {
            [0.0; 3]
        };
        Ray {
            origin: origin.coords(),
            dir,
            range,
        }
    }

    fn at(&self, r: f64, intensity: f64) -> Point3 {
        Point3::new(
            self.origin[0] + self.dir[0] * r,
            self.origin[1] + self.dir[1] * r,
            self.origin[2] + self.dir[2] * r,
            intensity.clamp(0.0, 1.0),
        )
    }
}

fn fog(cloud: &PointCloud, mor: f64, config: &CorruptionConfig) -> (PointCloud, CorruptionStats) {
    let m = &config.model;
    let alpha = MOR_CONTRAST_LN / mor;
    let mut rng = stream_rng(config.seed, 1);
    let mut stats = CorruptionStats {
        input: cloud.len(),
        ..Default::default()
    };
    let mut out = Vec::with_capacity(cloud.len());
    for p in &cloud.points {
        let [u_scatter, u_range, u_int]: [f64; 3] = rng.random();
        let ray = Ray::to(&cloud.sensor_origin, p);
        let transmittance = (-2.0 * alpha * ray.range).exp();
        let detectable = p.intensity.max(m.reflectance_floor) * transmittance >= m.detection_threshold;
        if detectable || ray.range == 0.0 {
            stats.retained += 1;
            out.push(Point3 {
                intensity: (p.intensity * transmittance).clamp(0.0, 1.0),
                ..*p
            });
            continue;
        }
        let upper = ray.range.min(m.r_halo);
        if u_scatter < m.scatter_probability && upper > m.r_min {
            stats.backscattered += 1;
            let r = m.r_min + u_range * (upper - m.r_min);
            out.push(ray.at(r, u_int * m.detection_threshold));
        } else {
            stats.dropped += 1;
        }
    }
    (
        PointCloud {
            points: out,
            ..cloud.clone()
        },
        stats,
    )
}

fn precipitation(cloud: &PointCloud, rate: f64, config: &CorruptionConfig) -> (PointCloud, CorruptionStats) {
    let m = &config.model;
    let mut stats = CorruptionStats {
        input: cloud.len(),
        ..Default::default()
    };
    if rate == 0.0 {
        stats.retained = cloud.len();
        return (cloud.clone(), stats);
    }
    let c = if config.kind == WeatherKind::Snow {
        m.c_snow
    } else {
        m.c_rain
    };
    let alpha = c * rate.powf(0.6);
    let sigma = m.range_noise_per_rate * rate;
    let mut loss_rng = stream_rng(config.seed, 0);
    let mut jitter_rng = stream_rng(config.seed, 1);
    let mut out = Vec::with_capacity(cloud.len());
    for p in &cloud.points {
        let u_loss: f64 = loss_rng.random();
        let noise: f64 = jitter_rng.sample(StandardNormal);
        let ray = Ray::to(&cloud.sensor_origin, p);
        if ray.range == 0.0 {
            stats.retained += 1;
            out.push(*p);
            continue;
        }
        let transmittance = (-2.0 * alpha * ray.range).exp();
        if u_loss < 1.0 - transmittance {
            stats.dropped += 1;
            continue;
        }
        stats.retained += 1;
        let r = (ray.range + sigma * noise).max(0.1 * m.r_min);
        out.push(ray.at(r, p.intensity * transmittance));
    }

    let mut halo_rng = stream_rng(config.seed, 2);
    let lambda = m.scatter_points_per_rate * rate;
    let count = if lambda > 0.0 {
        Poisson::new(lambda)
            .map(|d| d.sample(&mut halo_rng) as usize)
            .unwrap_or(0)
    } else {
        0
    };
    let o = cloud.sensor_origin;
    for _ in 0..count {
        let r = halo_rng.random_range(m.r_min..m.r_halo);
        let az = halo_rng.random_range(0.0..2.0 * PI);
        let el = if m.scatter_elevation[0] < m.scatter_elevation[1] {
            halo_rng.random_range(m.scatter_elevation[0]..m.scatter_elevation[1])
        } else {
            m.scatter_elevation[0]
        };
        let intensity = halo_rng.random::<f64>() * m.scatter_max_intensity;
        out.push(Point3::new(
            o.x + r * el.cos() * az.cos(),
            o.y + r * el.cos() * az.sin(),
            o.z + r * el.sin(),
            intensity,
        ));
    }
    stats.injected = count;
    (
        PointCloud {
            points: out,
            ..cloud.clone()
        },
        stats,
    )
}

/// Seed of frame `frame_index` of sequence `sequence_id`.
pub fn frame_seed(global_seed: u64, sequence_id: &str, frame_index: usize) -> u64 {
    derive_seed(global_seed, sequence_id, frame_index as u64)
}

/// Id given to the corrupted variant of a sequence.
pub fn variant_id(sequence_id: &str, kind: WeatherKind, level: SeverityLevel) -> String {
    format!("{sequence_id}__{kind}_l{level}")
}

/// Corrupts every frame of `seq` with a per-frame seed derived from
/// `(global_seed, sequence id, frame position)`. Frames run in parallel;
/// labels are copied unchanged.
pub fn corrupt_sequence(
    seq: &TrackingSequence,
    kind: WeatherKind,
    level: SeverityLevel,
    global_seed: u64,
    table: &SeverityTable,
) -> Result<TrackingSequence> {
    let frames = seq
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let config = table.config(kind, level, frame_seed(global_seed, &seq.sequence_id, i));
            let cloud = corrupt_frame(&frame.cloud, &config)?;
            Ok(crate::dataset::Frame { cloud, ..frame.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tags = seq.condition_tags.clone();
    tags.retain(|t| !t.starts_with("weather:") && !t.starts_with("level:") && !t.starts_with("source:"));
    tags.insert(format!("weather:{kind}"));
    tags.insert(format!("level:{level}"));
    tags.insert(format!("source:{}", seq.sequence_id));
    Ok(TrackingSequence {
        sequence_id: variant_id(&seq.sequence_id, kind, level),
        category: seq.category,
        frames,
        condition_tags: tags,
    })
}
