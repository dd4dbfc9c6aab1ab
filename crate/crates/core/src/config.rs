//! Run configuration: a JSON document validated into domain types with
//! field-path error messages.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DistributionKind, MotionalDistribution};
use crate::error::{Error, Result};
use crate::fit::FitOptions;
use crate::model::ModelParams;
use crate::quad::QuadratureConfig;
use crate::spectral::{Mode, SpectralDensitySpec, Temperature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Simulate,
    Fit,
    OracleCheck,
    Sweep,
    ReproduceNist,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunMode::Simulate => "simulate",
            RunMode::Fit => "fit",
            RunMode::OracleCheck => "oracle-check",
            RunMode::Sweep => "sweep",
            RunMode::ReproduceNist => "reproduce-nist",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub g: f64,
    pub d: f64,
    pub gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum SpectralSection {
    /// Flat J c² = γ0/(2π); γ0 is taken from the model section.
    Flat,
    Ohmic { strength: f64, cutoff: f64 },
    Discrete { modes: Vec<ModeSection> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub omega: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum TemperatureSection {
    Zero,
    Beta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum DistributionSection {
    Fock { n: usize, cutoff: Option<usize> },
    Coherent { nbar: f64, cutoff: Option<usize> },
    Thermal { nbar: f64, cutoff: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum TimeGridSection {
    Uniform { start: f64, stop: f64, count: usize },
    Explicit { times: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub p_min: f64,
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let o = FitOptions::default();
        FitSection {
            p_min: o.p_min,
            max_iterations: o.max_iterations,
            cost_tolerance: o.cost_tolerance,
            step_tolerance: o.step_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// One of "d", "gamma0", "g", "nbar".
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        QuadratureSection {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub modes: Vec<ModeSection>,
    #[serde(default = "default_fock_cutoff")]
    pub fock_cutoff: usize,
}

fn default_fock_cutoff() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Trace CSV to fit (with its `.meta.json` sidecar next to it).
    pub trace: String,
}

/// Top-level run configuration. The `mode` field is optional; when present
/// it must agree with the CLI subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RunMode>,
    pub model: ModelSection,
    #[serde(default = "default_temperature")]
    pub temperature: TemperatureSection,
    #[serde(default = "default_spectral")]
    pub spectral: SpectralSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridSection>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    /// Base name for output files (defaults to the mode name).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn default_temperature() -> TemperatureSection {
    TemperatureSection::Zero
}

fn default_spectral() -> SpectralSection {
    SpectralSection::Flat
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config {
        path: "<root>".into(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.temperature()?;
        self.spectral_spec()?.validate()?;
        if let Some(grid) = &self.time_grid {
            self.times()?;
            if let TimeGridSection::Uniform { count, .. } = grid {
                if *count < 2 {
                    return Err(Error::Config {
                        path: "time_grid.count".into(),
                        message: "must be >= 2".into(),
                    });
                }
            }
        }
        if let Some(d) = &self.distribution {
            self.build_distribution(d)?;
        }
        if let Some(s) = &self.sweep {
            if !matches!(s.parameter.as_str(), "d" | "gamma0" | "g" | "nbar") {
                return Err(Error::Config {
                    path: "sweep.parameter".into(),
                    message: format!(
                        "unknown sweep axis {:?} (expected d, gamma0, g, or nbar)",
                        s.parameter
                    ),
                });
            }
            if s.values.is_empty() {
                return Err(Error::Config {
                    path: "sweep.values".into(),
                    message: "must be non-empty".into(),
                });
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.g, self.model.d, self.model.gamma0)
    }

    pub fn temperature(&self) -> Result<Temperature> {
        match self.temperature {
            TemperatureSection::Zero => Ok(Temperature::Zero),
            TemperatureSection::Beta(beta) => Temperature::finite(beta),
        }
    }

    pub fn spectral_spec(&self) -> Result<SpectralDensitySpec> {
        Ok(match &self.spectral {
            SpectralSection::Flat => SpectralDensitySpec::Flat {
                gamma0: self.model.gamma0,
            },
            SpectralSection::Ohmic { strength, cutoff } => SpectralDensitySpec::OhmicExpCutoff {
                strength: *strength,
                cutoff: *cutoff,
            },
            SpectralSection::Discrete { modes } => SpectralDensitySpec::DiscreteModes {
                modes: modes
                    .iter()
                    .map(|m| Mode {
                        omega: m.omega,
                        coupling: m.coupling,
                    })
                    .collect(),
            },
        })
    }

    fn build_distribution(&self, section: &DistributionSection) -> Result<MotionalDistribution> {
        let (kind, cutoff) = match section {
            DistributionSection::Fock { n, cutoff } => (DistributionKind::Fock { n: *n }, *cutoff),
            DistributionSection::Coherent { nbar, cutoff } => {
                (DistributionKind::Coherent { nbar: *nbar }, *cutoff)
            }
            DistributionSection::Thermal { nbar, cutoff } => {
                (DistributionKind::Thermal { nbar: *nbar }, *cutoff)
            }
        };
        match cutoff {
            Some(c) => MotionalDistribution::new(kind, c),
            None => MotionalDistribution::auto(kind),
        }
    }

    pub fn distribution(&self) -> Result<MotionalDistribution> {
        let section = self.distribution.as_ref().ok_or_else(|| Error::Config {
            path: "distribution".into(),
            message: "required for this mode".into(),
        })?;
        self.build_distribution(section)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let grid = self.time_grid.as_ref().ok_or_else(|| Error::Config {
            path: "time_grid".into(),
            message: "required for this mode".into(),
        })?;
        let times = match grid {
            TimeGridSection::Uniform { start, stop, count } => {
                if !(*stop > *start) || *count < 2 {
                    return Err(Error::Config {
                        path: "time_grid".into(),
                        message: "need stop > start and count >= 2".into(),
                    });
                }
                (0..*count)
                    .map(|i| start + (stop - start) * i as f64 / (*count as f64 - 1.0))
                    .collect()
            }
            TimeGridSection::Explicit { times } => times.clone(),
        };
        crate::spectral::check_times(&times)?;
        Ok(times)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            p_min: self.fit.p_min,
            max_iterations: self.fit.max_iterations,
            cost_tolerance: self.fit.cost_tolerance,
            step_tolerance: self.fit.step_tolerance,
        }
    }

    pub fn quadrature_config(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.quadrature.abs_tol,
            rel_tol: self.quadrature.rel_tol,
            ..QuadratureConfig::default()
        }
    }

    pub fn output_name(&self, mode: RunMode) -> String {
        self.name.clone().unwrap_or_else(|| mode.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"g": 1.0, "d": -0.15, "gamma0": 0.1},
        "spectral": {"family": "flat"},
        "distribution": {"kind": "fock", "n": 0},
        "time_grid": {"start": 0.0, "stop": 25.0, "count": 500}
    }"#;

    #[test]
    fn minimal_simulate_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.times().unwrap().len(), 500);
        assert_eq!(cfg.distribution().unwrap().cutoff(), 0);
        assert_eq!(
            cfg.spectral_spec().unwrap(),
            SpectralDensitySpec::Flat { gamma0: 0.1 }
        );
    }

    #[test]
    fn invalid_d_names_the_field() {
        let text = MINIMAL.replace("-0.15", "-0.6");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.d"), "message was: {msg}");
        assert!(msg.contains("-0.5"), "message was: {msg}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = r#"{
            "model": {"g": 1.0, "d": -0.15, "gamma0": 0.1},
            "model": {"g": 2.0, "d": 0.0, "gamma0": 0.1},
            "time_grid": {"start": 0.0, "stop": 1.0, "count": 10}
        }"#;
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("\"model\"", "\"modle\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn bad_sweep_axis_rejected() {
        let text = r#"{
            "model": {"g": 1.0, "d": -0.15, "gamma0": 0.1},
            "sweep": {"parameter": "eta", "values": [0.1]}
        }"#;
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("sweep.parameter"), "message was: {msg}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
