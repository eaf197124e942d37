//! Run configuration files.
//!
//! Each command reads a TOML file with its own set of sections. Unknown keys
//! are rejected. The canonical form of a config is its re-serialization after
//! parsing; the SHA-256 of that text identifies the run in every output file.
//!
//! Measurements are written as `"m,n"` (optionally in braces) for a two-port
//! click pattern or `"N=k"` for a k-fold multiport coincidence.

use std::path::Path;

use mechfringe_core::{ClickEvent, CouplingConfig, MechanicalConstants, Measurement, Unit};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub mu: f64,
    pub phi: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.5
}

impl Coupling {
    pub fn to_core(&self) -> CliResult<CouplingConfig> {
        Ok(CouplingConfig::new(self.mu, self.phi, self.alpha)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LineGrid {
    pub fn validate(&self, what: &str) -> CliResult<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) || self.points < 2 {
            return Err(CliError::Config(format!("{what}: need min < max and at least 2 points")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        mechfringe_core::wigner::linspace(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub nbar: f64,
    pub events: Vec<String>,
    pub coupling: Coupling,
    pub grid: LineGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldConfig {
    pub events: Vec<String>,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub nbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerGridSize {
    pub nx: usize,
    pub np: usize,
}

impl Default for WignerGridSize {
    fn default() -> Self {
        Self { nx: 512, np: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub measurement: String,
    pub nbar: f64,
    pub coupling: Coupling,
    #[serde(default)]
    pub grid: WignerGridSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub sigma: f64,
    #[serde(default = "default_unit")]
    pub unit: Unit,
}

fn default_unit() -> Unit {
    Unit::QuantumNoise
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub bins: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub events: Vec<String>,
    pub target: usize,
    pub coupling: Coupling,
    pub drive: Drive,
    pub histogram: HistogramSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<MechanicalConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceModel {
    pub a: f64,
    pub c: f64,
    /// Mechanical angular frequency in rad/s.
    pub omega_m: f64,
    pub d: f64,
    #[serde(default = "default_true")]
    pub offset_modulated: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synthesis {
    pub traces: usize,
    /// Rayleigh shape parameter of the drive in readout-range units.
    pub drive_sigma: f64,
    pub noise_sigma: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    /// Largest `|dX|`, `|dP|` in radians counted as a recovered point.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_samples() -> usize {
    5000
}

fn default_rate() -> f64 {
    1e8
}

fn default_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthfitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: TraceModel,
    pub synthesis: Synthesis,
}

/// A parsed config together with its canonical text.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub canonical: String,
    pub sha256: String,
}

pub fn parse<T: Serialize + DeserializeOwned>(text: &str) -> CliResult<Loaded<T>> {
    let config: T = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let canonical = canonical(&config)?;
    let sha256 = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, canonical, sha256 })
}

pub fn canonical<T: Serialize>(config: &T) -> CliResult<String> {
    toml::to_string(config).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
}

pub fn load<T: Serialize + DeserializeOwned>(path: &Path) -> CliResult<Loaded<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse_measurement(spec: &str) -> CliResult<Measurement> {
    let t = spec.trim();
    if let Some(rest) = t.strip_prefix("N=").or_else(|| t.strip_prefix("n=")) {
        let n: usize = rest.trim().parse().map_err(|_| CliError::Config(format!("invalid coincidence order in '{spec}'")))?;
        if n < 2 {
            return Err(CliError::Config(format!("coincidence order must be at least 2, got {n}")));
        }
        return Ok(Measurement::Noon(n));
    }
    Ok(Measurement::TwoPort(t.parse::<ClickEvent>()?))
}

pub fn parse_measurements(specs: &[String]) -> CliResult<Vec<Measurement>> {
    if specs.is_empty() {
        return Err(CliError::Config("no events requested".into()));
    }
    specs.iter().map(|s| parse_measurement(s)).collect()
}

/// File-name-safe label: `1_0` for `{1,0}`, `n3` for a threefold coincidence.
pub fn tag(m: Measurement) -> String {
    match m {
        Measurement::TwoPort(ev) => format!("{}_{}", ev.m, ev.n),
        Measurement::Noon(n) => format!("n{n}"),
    }
}
