use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::{layer_name_of, scan_layer_dir, LayerEntry};
use crate::defaults;
use crate::error::{ConfigError, Error, Result};
use crate::saliency::Method;

/// A validated sweep description with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Weight files or flat layer directories.
    pub layers: Vec<PathBuf>,
    /// Calibration files or directories of `*.calib.npy`; matched to layers by name.
    pub calibration: Option<Vec<PathBuf>>,
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub bits: u8,
    pub clip_sigma: f32,
    pub rank: usize,
    pub damping: f64,
    pub seed: u64,
    /// When false the `wall_ms` column of `sweep.csv` is left empty so the
    /// file is byte-reproducible. Timings always go to `report.json`.
    pub record_wall_clock: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    layers: Option<Vec<PathBuf>>,
    calibration: Option<Vec<PathBuf>>,
    methods: Option<Vec<String>>,
    budgets: Option<Vec<i64>>,
    bits: Option<i64>,
    clip_sigma: Option<f64>,
    rank: Option<i64>,
    damping: Option<f64>,
    seed: Option<u64>,
    record_wall_clock: Option<bool>,
}

/// Reads and validates a JSON sweep configuration.
pub fn parse_config(path: impl AsRef<Path>) -> Result<SweepConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SweepConfig::from_json(&text)
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            violations: vec![format!("not a valid config document: {e}")],
        })?;
        Self::validate(raw).map_err(Error::from)
    }

    fn validate(raw: RawConfig) -> Result<Self, ConfigError> {
        let mut bad = Vec::new();

        let layers = raw.layers.unwrap_or_default();
        if layers.is_empty() {
            bad.push("`layers` must list at least one weight file or directory".to_owned());
        }

        let mut methods = Vec::new();
        match raw.methods {
            None => bad.push("`methods` is required".to_owned()),
            Some(names) if names.is_empty() => bad.push("`methods` must not be empty".to_owned()),
            Some(names) => {
                for name in names {
                    match name.parse::<Method>() {
                        Ok(m) if methods.contains(&m) => {
                            bad.push(format!("method `{name}` listed more than once"))
                        }
                        Ok(m) => methods.push(m),
                        Err(_) => bad.push(format!(
                            "unknown method `{name}` (expected one of random, awq, spqr, svd, none)"
                        )),
                    }
                }
            }
        }

        let raw_budgets = raw
            .budgets
            .unwrap_or_else(|| defaults::BUDGETS.iter().map(|&k| k as i64).collect());
        if raw_budgets.is_empty() {
            bad.push("`budgets` must not be empty".to_owned());
        }
        for &k in &raw_budgets {
            if k < 0 {
                bad.push(format!("budget {k} is negative"));
            }
        }
        if raw_budgets.windows(2).any(|w| w[1] <= w[0]) {
            bad.push(format!("`budgets` must be strictly increasing, got {raw_budgets:?}"));
        }
        let budgets = raw_budgets.iter().map(|&k| k.max(0) as usize).collect();

        let bits = raw.bits.unwrap_or(defaults::BITS as i64);
        if !(2..=8).contains(&bits) {
            bad.push(format!("`bits` must be in [2, 8], got {bits}"));
        }
        let clip_sigma = raw.clip_sigma.unwrap_or(defaults::CLIP_SIGMA as f64);
        if !(clip_sigma.is_finite() && clip_sigma > 0.0) {
            bad.push(format!("`clip_sigma` must be > 0, got {clip_sigma}"));
        }
        let rank = raw.rank.unwrap_or(defaults::RANK as i64);
        if rank < 1 {
            bad.push(format!("`rank` must be >= 1, got {rank}"));
        }
        let damping = raw.damping.unwrap_or(defaults::DAMPING);
        if !(damping.is_finite() && damping > 0.0) {
            bad.push(format!("`damping` must be > 0, got {damping}"));
        }

        let calibration = raw.calibration.filter(|c| !c.is_empty());
        let data_aware: Vec<&str> = methods
            .iter()
            .filter(|m| m.needs_calibration())
            .map(|m| m.as_str())
            .collect();
        if !data_aware.is_empty() && calibration.is_none() {
            bad.push(format!(
                "methods [{}] need calibration activations but `calibration` is missing",
                data_aware.join(", ")
            ));
        }

        if !bad.is_empty() {
            return Err(ConfigError { violations: bad });
        }
        Ok(SweepConfig {
            layers,
            calibration,
            methods,
            budgets,
            bits: bits as u8,
            clip_sigma: clip_sigma as f32,
            rank: rank as usize,
            damping,
            seed: raw.seed.unwrap_or(defaults::SEED),
            record_wall_clock: raw.record_wall_clock.unwrap_or(false),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn quant_config(&self) -> crate::quant::QuantConfig {
        crate::quant::QuantConfig::new(self.bits, self.clip_sigma)
            .expect("validated config has a valid quantizer")
    }

    /// Expands layer references into concrete layer files, attaching
    /// calibration files by layer name. Explicit `calibration` entries take
    /// precedence over `<name>.calib.npy` siblings found in layer directories.
    pub fn resolve_layers(&self) -> Result<Vec<LayerEntry>> {
        let mut layers: Vec<LayerEntry> = Vec::new();
        for path in &self.layers {
            if path.is_dir() {
                layers.extend(scan_layer_dir(path)?);
            } else {
                layers.push(LayerEntry {
                    name: layer_name_of(path),
                    weights: path.clone(),
                    calibration: None,
                });
            }
        }

        let mut seen = std::collections::BTreeSet::new();
        for l in &layers {
            if !seen.insert(l.name.clone()) {
                return Err(Error::Usage(format!("layer name `{}` appears more than once", l.name)));
            }
        }

        let mut calib: BTreeMap<String, PathBuf> = BTreeMap::new();
        for path in self.calibration.iter().flatten() {
            if path.is_dir() {
                let rd = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
                for item in rd {
                    let p = item.map_err(|e| Error::io(path, e))?.path();
                    if p.to_string_lossy().ends_with(".calib.npy") {
                        calib.insert(layer_name_of(&p), p);
                    }
                }
            } else {
                calib.insert(layer_name_of(path), path.clone());
            }
        }
        for l in &mut layers {
            if let Some(p) = calib.get(&l.name) {
                l.calibration = Some(p.clone());
            }
        }
        Ok(layers)
    }
}
