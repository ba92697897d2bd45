use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::presets::{Preset, SignalSpec};
use crate::error::{Error, Result};
use crate::signal::DEFAULT_SAMPLE_RATE;
use crate::sst::{SSTConfig, WindowSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "BPF")]
    Bpf,
    #[serde(rename = "SST")]
    Sst,
    #[serde(rename = "SST-tuned")]
    SstTuned,
    #[serde(rename = "SIFT")]
    Sift,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bpf, Method::Sst, Method::SstTuned, Method::Sift];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bpf => "BPF",
            Method::Sst => "SST",
            Method::SstTuned => "SST-tuned",
            Method::Sift => "SIFT",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Noise level, either absolute or relative to the clean signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    StandardDeviation(f64),
    TargetSnrDb(f64),
}

/// Parameters shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    pub window_length: usize,
    pub tuned_window_length: usize,
    /// Half-width of the reconstruction band and the BPF margin, Hz.
    pub band_b: f64,
    pub lambda: f64,
    pub xi: f64,
    pub prior_halfwidth: f64,
    pub sst: SSTConfig,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            window_length: WindowSpec::DEFAULT_LENGTH,
            tuned_window_length: WindowSpec::TUNED_LENGTH,
            band_b: 0.1,
            lambda: 1.0,
            xi: 1.4,
            prior_halfwidth: 0.5,
            sst: SSTConfig::default(),
        }
    }
}

/// A benchmark experiment, loadable from JSON or TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub signal: SignalSpec,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub noise: Option<NoiseLevel>,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub params: MethodParams,
    #[serde(default = "one_second")]
    pub trim: f64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn default_rate() -> f64 {
    DEFAULT_SAMPLE_RATE
}
fn default_duration() -> f64 {
    20.0
}
fn one() -> usize {
    1
}
fn one_second() -> f64 {
    1.0
}
fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl ExperimentConfig {
    /// Noiseless single-realisation run of a preset with default parameters.
    pub fn preset(preset: Preset) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            signal: SignalSpec::Preset { preset },
            sample_rate: default_rate(),
            duration: default_duration(),
            noise: None,
            realizations: 1,
            seed: 0,
            methods: all_methods(),
            params: MethodParams::default(),
            trim: 1.0,
            workers: 1,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `.toml` files as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.sample_rate > 0.0 && self.duration > 0.0) {
            return Err(Error::InvalidConfig("sample rate and duration must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("at least one realisation is required".into()));
        }
        let len = (self.duration * self.sample_rate).round() as usize;
        let longest = self.params.window_length.max(self.params.tuned_window_length);
        if len <= longest {
            return Err(Error::InvalidConfig(format!(
                "{len} samples do not exceed the window length {longest}"
            )));
        }
        if 2.0 * self.trim * self.sample_rate >= len as f64 || self.trim < 0.0 {
            return Err(Error::InvalidConfig(format!("trim of {} s leaves no samples", self.trim)));
        }
        match self.noise {
            Some(NoiseLevel::StandardDeviation(sd)) if !(sd >= 0.0) => {
                return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {sd}")))
            }
            Some(NoiseLevel::TargetSnrDb(snr)) if !snr.is_finite() => {
                return Err(Error::InvalidConfig("target SNR must be finite".into()))
            }
            _ => {}
        }
        if !(self.params.band_b > 0.0 && self.params.prior_halfwidth > 0.0 && self.params.xi > 0.0) {
            return Err(Error::InvalidConfig("band, prior half-width and ξ must be positive".into()));
        }
        WindowSpec::new(self.params.window_length)?;
        WindowSpec::new(self.params.tuned_window_length)?;
        self.params.sst.validate()?;
        let mut seen = std::collections::HashSet::new();
        if let Some(m) = self.methods.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::InvalidConfig(format!("method {m} listed twice")));
        }
        self.signal.components().map(|_| ())
    }
}
