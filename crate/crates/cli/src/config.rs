//! Experiment configuration.
//!
//! The primary format is line-based `key = value` with dotted section
//! names (`grid.n = 256`), which is valid TOML; JSON with the same shape is
//! accepted too. Every field has a default, so an empty file is a complete
//! configuration.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Zero,
    Constant,
    SingleMode,
    MultiMode,
    TimeVarying,
}

impl Preset {
    pub fn tag(self) -> &'static str {
        match self {
            Preset::Zero => "zero",
            Preset::Constant => "constant",
            Preset::SingleMode => "single-mode",
            Preset::MultiMode => "multi-mode",
            Preset::TimeVarying => "time-varying",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { d: 1, n: 256, length: 8.0 * PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub preset: Preset,
    pub amplitude: f64,
    pub alpha: f64,
    /// Wavenumber of the single-mode and time-varying presets.
    pub xi0: f64,
    /// Seed of the multi-mode phases.
    pub seed: u64,
    /// Number of stored time samples for time-dependent presets.
    pub time_samples: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { preset: Preset::SingleMode, amplitude: 1.0, alpha: 0.25, xi0: 1.0, seed: 1, time_samples: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(rename = "K_max")]
    pub k_max: usize,
    pub tol: f64,
    pub intervals: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { k_max: 12, tol: 1e-6, intervals: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(rename = "N")]
    pub n_paths: usize,
    pub h_t: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    /// Density bandwidth in units of the grid spacing.
    pub bandwidth: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { n_paths: 20_000, h_t: 1e-3, horizon: 1.0, seed: 1, bandwidth: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScaling {
    /// `times` are physical times.
    Absolute,
    /// `times` are values of `t Y^{2/(1−α)}` (or `t X²` when `Y = 0`).
    Drift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub c: f64,
    pub kappa_grid: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub time_scaling: TimeScaling,
    pub sources: usize,
    /// Width of the centred source window as a fraction of `L`.
    pub source_span: f64,
    /// Short time of the lower-bound bootstrap.
    pub a: f64,
    pub compositions: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            c: 2.0,
            kappa_grid: (1..=9).map(|j| j as f64 / 10.0).collect(),
            amplitudes: vec![0.5, 1.0],
            time_scaling: TimeScaling::Absolute,
            sources: 4,
            source_span: 0.25,
            a: 0.25,
            compositions: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessConfig {
    pub lambda: f64,
    pub kappa: f64,
    pub t: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self { lambda: 1.0, kappa: 0.5, t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametrixConfig {
    pub t: f64,
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        Self { t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyConfig {
    pub t: f64,
    pub beta: f64,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Mollification of the terminal delta in units of `h²`.
    pub eps: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self { t: 1.0, beta: 1.6, intervals: 128, tol: 1e-10, max_iter: 60, eps: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig {
    pub radii: Vec<f64>,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self { radii: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrrConfig {
    pub kappa: f64,
    pub paths: usize,
    pub pairs: usize,
    /// Divisor `M` in the exponential sup-moment.
    pub moment_m: f64,
}

impl Default for GrrConfig {
    fn default() -> Self {
        Self { kappa: 0.1, paths: 20, pairs: 50, moment_m: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifyConfig {
    pub preset: Preset,
    pub amplitude: f64,
    pub levels: Vec<i32>,
    pub t: f64,
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self { preset: Preset::MultiMode, amplitude: 0.5, levels: vec![1, 2, 3, 4, 5, 6], t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IBoundConfig {
    pub k_max: usize,
    pub times: Vec<f64>,
    pub sources: usize,
    pub c: f64,
}

impl Default for IBoundConfig {
    fn default() -> Self {
        Self { k_max: 3, times: vec![0.5, 1.0], sources: 4, c: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub drift: DriftConfig,
    pub times: Vec<f64>,
    pub truncation: TruncationConfig,
    pub mc: MonteCarloConfig,
    pub envelope: EnvelopeConfig,
    pub sharpness: SharpnessConfig,
    pub parametrix: ParametrixConfig,
    pub cauchy: CauchyConfig,
    pub escape: EscapeConfig,
    pub grr: GrrConfig,
    pub mollify: MollifyConfig,
    pub ibound: IBoundConfig,
    /// Report directory; not part of the hash.
    pub output: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            drift: DriftConfig::default(),
            times: vec![0.25, 0.5, 1.0],
            truncation: TruncationConfig::default(),
            mc: MonteCarloConfig::default(),
            envelope: EnvelopeConfig::default(),
            sharpness: SharpnessConfig::default(),
            parametrix: ParametrixConfig::default(),
            cauchy: CauchyConfig::default(),
            escape: EscapeConfig::default(),
            grr: GrrConfig::default(),
            mollify: MollifyConfig::default(),
            ibound: IBoundConfig::default(),
            output: "reports".into(),
        }
    }
}

impl ExperimentConfig {
    /// Parses either format; text starting with `{` is read as JSON.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.envelope.c > 1.0) {
            return bad("envelope.c must exceed 1");
        }
        if self.envelope.kappa_grid.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return bad("envelope.kappa_grid entries must lie in (0, 1)");
        }
        if !(self.drift.alpha > 0.0 && self.drift.alpha < 0.5) {
            return bad("drift.alpha must lie in (0, 1/2)");
        }
        if self.times.is_empty() || self.times.iter().any(|&t| !(t > 0.0)) {
            return bad("times must be a nonempty list of positive values");
        }
        if !(self.envelope.source_span > 0.0 && self.envelope.source_span < 1.0) {
            return bad("envelope.source_span must lie in (0, 1)");
        }
        if self.drift.time_samples < 2 {
            return bad("drift.time_samples must be at least 2");
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form,
    /// with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.clear();
        let canon = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_json_agree() {
        let a = ExperimentConfig::parse("grid.n = 128\ndrift.preset = \"zero\"\nmc.N = 10\n").unwrap();
        let b =
            ExperimentConfig::parse(r#"{"grid": {"n": 128}, "drift": {"preset": "zero"}, "mc": {"N": 10}}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn rejects_unknown_presets_and_bad_dilation() {
        assert!(ExperimentConfig::parse("drift.preset = \"wiggly\"").is_err());
        assert!(ExperimentConfig::parse("envelope.c = 0.5").is_err());
        assert!(ExperimentConfig::parse("grid.bogus = 1").is_err());
    }

    #[test]
    fn output_does_not_enter_the_hash() {
        let a = ExperimentConfig::parse("output = \"x\"").unwrap();
        let b = ExperimentConfig::parse("output = \"y\"").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
