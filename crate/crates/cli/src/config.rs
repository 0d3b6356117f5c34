//! JSON config file (`--config`). Every field is optional; command-line
//! flags win over the file, the file wins over built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use mca::pipeline::BandSettings;
use mca::sphere::HeadDimensions;
use serde::Deserialize;

use crate::Invalid;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,

    // Head model.
    pub radius_m: Option<f64>,
    pub head: Option<HeadDimensions>,
    pub speed_of_sound_mps: Option<f64>,
    pub ear_azimuths_deg: Option<[f64; 2]>,
    pub ear_elevations_deg: Option<[f64; 2]>,
    pub allow_any_radius: Option<bool>,

    // synth-sphere.
    pub grid: Option<String>,
    pub ir_length: Option<usize>,
    pub sample_rate_hz: Option<f64>,
    pub subject: Option<String>,

    // upsample.
    pub order: Option<usize>,
    pub target: Option<String>,
    pub aliasing_fade: Option<bool>,
    /// `null` or absent: no limiter.
    pub limiter: Option<LimiterConfig>,
    pub phase: Option<String>,
    pub sh_mode: Option<String>,
    pub auditory_branch: Option<String>,
    pub correction: Option<bool>,
    pub bands: Option<BandSettings>,

    // evaluate.
    pub high_band_min_hz: Option<f64>,
    pub binaural: Option<bool>,
    pub horizontal_tolerance_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimiterConfig {
    pub limit_db: f64,
    #[serde(default)]
    pub knee_db: f64,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| Invalid(format!("config {}: {e}", path.display())))?;
        if cfg.radius_m.is_some() && cfg.head.is_some() {
            return Err(Invalid(format!(
                "config {}: radius_m and head are mutually exclusive",
                path.display()
            ))
            .into());
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"ordr": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn limiter_knee_defaults_to_zero() {
        let cfg: FileConfig = serde_json::from_str(r#"{"limiter": {"limit_db": 12}}"#).unwrap();
        assert_eq!(cfg.limiter, Some(LimiterConfig { limit_db: 12.0, knee_db: 0.0 }));
    }
}
