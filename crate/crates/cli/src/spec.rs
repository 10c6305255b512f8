use std::fmt;

use osa_core::montecarlo::{ProfileCenter, ProfilePopulation};
use osa_core::{ProtocolKind, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Sweep variable that sets the spatial opportunity instead of a raw field.
pub const Q_TARGET: &str = "Q_target";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Opportunity,
    CoveragePrimary,
    CoverageSecondary,
    Throughput,
    DensityProfile,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Opportunity => "opportunity",
            Metric::CoveragePrimary => "coverage_primary",
            Metric::CoverageSecondary => "coverage_secondary",
            Metric::Throughput => "throughput",
            Metric::DensityProfile => "density_profile",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Simulate,
    #[default]
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        self != Mode::Simulate
    }

    pub fn simulate(self) -> bool {
        self != Mode::Analytic
    }
}

/// A grid over one parameter, or over target opportunities when `variable`
/// is `Q_target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: String,
    pub values: Vec<f64>,
}

/// Where and what a density profile counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub center: ProfileCenter,
    pub population: ProfilePopulation,
    pub bin_edges: Vec<f64>,
}

fn default_trials() -> u64 {
    100_000
}

fn default_r_sim() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub params: SystemParams,
    pub protocol: ProtocolKind,
    pub metric: Metric,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_trials")]
    pub n_trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_r_sim")]
    pub r_sim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    /// Free-form label copied to every row, naming the curve within a figure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentSpec {
    pub fn new(params: SystemParams, protocol: ProtocolKind, metric: Metric) -> Self {
        ExperimentSpec {
            params,
            protocol,
            metric,
            mode: Mode::Both,
            sweep: None,
            n_trials: default_trials(),
            seed: 0,
            r_sim: default_r_sim(),
            profile: None,
            series: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.variable != Q_TARGET && !SystemParams::FIELD_NAMES.contains(&sweep.variable.as_str()) {
                return Err(config(format!(
                    "sweep variable `{}` is neither a parameter nor {Q_TARGET}",
                    sweep.variable
                )));
            }
            if sweep.values.is_empty() {
                return Err(config("sweep grid is empty"));
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(config(format!("sweep grid contains non-finite value {v}")));
            }
            if sweep.variable == Q_TARGET
                && matches!(self.protocol, ProtocolKind::AllActive | ProtocolKind::NoneActive)
            {
                return Err(config(format!("{} has a fixed opportunity; it cannot follow {Q_TARGET}", self.protocol)));
            }
        }
        if self.mode.simulate() && self.n_trials == 0 {
            return Err(config("n_trials must be at least 1"));
        }
        if !(self.r_sim.is_finite() && self.r_sim > 0.0) {
            return Err(config(format!("r_sim must be positive, got {}", self.r_sim)));
        }
        match (self.metric, &self.profile) {
            (Metric::DensityProfile, None) => return Err(config("density_profile needs a `profile` section")),
            (Metric::DensityProfile, Some(p)) => {
                if self.sweep.is_some() {
                    return Err(config("density_profile does not take a sweep"));
                }
                if p.bin_edges.len() < 2 {
                    return Err(config("profile needs at least two bin edges"));
                }
            }
            (_, Some(_)) => return Err(config("`profile` only applies to density_profile")),
            _ => {}
        }
        Ok(())
    }
}

/// Parses a configuration file holding one experiment or an array of them.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentSpec>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let specs = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    Ok(specs)
}
