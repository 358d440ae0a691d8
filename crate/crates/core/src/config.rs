//! Run configuration shared by every batch job.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DlmRules, MAX_CROSSTALK};
use crate::protocols::{DetectorModel, Instruments, PhaseProtocol, SourceModel};

/// The scanned phase points.
///
/// Either `points` evenly spaced values on `[start, stop)` or an explicit
/// `values` list, which takes precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGrid {
    pub points: u32,
    pub start: f64,
    pub stop: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for PhiGrid {
    fn default() -> Self {
        Self {
            points: 16,
            start: 0.0,
            stop: TAU,
            values: None,
        }
    }
}

impl PhiGrid {
    pub fn uniform(points: u32) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self {
            points: values.len() as u32,
            values: Some(values),
            ..Self::default()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let step = (self.stop - self.start) / f64::from(self.points);
        (0..self.points)
            .map(|i| self.start + f64::from(i) * step)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(Error::config("phi0_grid.values", "must not be empty"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("phi0_grid.values", "must be finite"));
            }
            return Ok(());
        }
        if self.points == 0 {
            return Err(Error::config("phi0_grid.points", "must be >= 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::config("phi0_grid.start", "range must be finite"));
        }
        Ok(())
    }
}

/// Everything a seeded batch job needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Memory parameter of both beamsplitters.
    pub alpha: f64,
    /// Modulator crosstalk fraction.
    pub beta: f64,
    pub phi0_grid: PhiGrid,
    pub photons_per_set: u64,
    pub sets_per_protocol: u32,
    /// Protocols measured at every phase point, in order.
    pub protocols: Vec<PhaseProtocol>,
    pub source: SourceModel,
    pub detector: DetectorModel,
    pub master_seed: u64,
    /// Keep one device for the whole run instead of a fresh one per cell.
    pub persistence: bool,
    /// Monte Carlo replicas per EBCM prediction point.
    pub replicas: u32,
    /// Untracked warm-up photons before counting.
    pub burn_in: u64,
    /// Memory parameters visited by the alpha scan.
    pub alpha_grid: Vec<f64>,
    /// Block length of the slow protocol in the switching-rate comparison.
    pub switch_block: u32,
    pub dlm: DlmRules,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            beta: 0.0,
            phi0_grid: PhiGrid::default(),
            photons_per_set: 5_000,
            sets_per_protocol: 10,
            protocols: PhaseProtocol::acquisition_order(),
            source: SourceModel::default(),
            detector: DetectorModel::default(),
            master_seed: 20_120_217,
            persistence: true,
            replicas: 20,
            burn_in: 0,
            alpha_grid: vec![0.5, 0.9, 0.98, 0.99, 0.999],
            switch_block: 10,
            dlm: DlmRules::default(),
        }
    }
}

/// Minimum number of EBCM replicas per prediction point.
pub const MIN_REPLICAS: u32 = 20;

impl RunConfig {
    /// Parses a TOML config, or the JSON metadata sidecar of a previous run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = if path.extension().is_some_and(|e| e == "json") {
            crate::io::Sidecar::from_json(&text)
                .map_err(|e| Error::config("metadata", e.to_string()))?
                .config
        } else {
            Self::from_toml(&text)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = unknown_key(&message).unwrap_or_else(|| "config".to_string());
            Error::config(key, message)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn instruments(&self) -> Instruments {
        Instruments {
            source: self.source,
            detector: self.detector,
        }
    }

    /// Checks every module precondition reachable from this config.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(
                "alpha",
                format!("{} not in [0, 1]", self.alpha),
            ));
        }
        if !(0.0..=MAX_CROSSTALK).contains(&self.beta) {
            return Err(Error::config(
                "beta",
                format!("{} not in [0, 0.2]", self.beta),
            ));
        }
        self.phi0_grid.validate()?;
        if self.photons_per_set == 0 {
            return Err(Error::config("photons_per_set", "must be >= 1"));
        }
        if self.sets_per_protocol == 0 {
            return Err(Error::config("sets_per_protocol", "must be >= 1"));
        }
        if self.protocols.is_empty() {
            return Err(Error::config(
                "protocols",
                "must list at least one protocol",
            ));
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas", "must be >= 1"));
        }
        if self.switch_block == 0 {
            return Err(Error::config("switch_block", "must be >= 1"));
        }
        self.source.validate()?;
        self.detector.validate()?;
        Ok(())
    }

    /// Extra checks for the alpha scan.
    pub fn validate_alpha_scan(&self) -> Result<()> {
        self.validate()?;
        if self.alpha_grid.is_empty() {
            return Err(Error::config("alpha_grid", "must not be empty"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::config("alpha_grid", format!("{a} not in (0, 1]")));
        }
        if self.replicas < MIN_REPLICAS {
            return Err(Error::config(
                "replicas",
                format!("{} < {MIN_REPLICAS} replicas per prediction", self.replicas),
            ));
        }
        Ok(())
    }
}

fn unknown_key(message: &str) -> Option<String> {
    // toml reports "unknown field `name`, expected ..."
    let rest = message.split("unknown field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}
