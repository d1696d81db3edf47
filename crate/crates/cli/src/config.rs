//! Run configuration: sectioned `key = value` files, validated up front.
//!
//! A config is rejected with a single aggregated error listing every
//! violation, so sweeps fail fast instead of dying one knob at a time.

use std::path::Path;

use hyprl_core::dynamics::ETA_MIN;
use hyprl_core::initdata::DataSpec;
use hyprl_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub ymax: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub eta: f64,
    pub ell: f64,
}

/// `mu = "auto"` resolves through the step policy from the fitted constants;
/// a number pins it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSetting {
    Fixed(f64),
    Auto(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub rho0: f64,
    pub mu: MuSetting,
    /// Defaults to `1/mu` when absent.
    pub t_final: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Differential-inequality constant from a pilot run, fed to the
    /// automatic step policy (0 without a pilot).
    #[serde(default)]
    pub pilot_c: f64,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_dt_max() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormsSection {
    pub mmax: usize,
    pub kmax: usize,
    pub tail_tol: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection { mmax: 12, kmax: 8, tail_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    /// Record norms every this many steps.
    pub cadence: usize,
    /// Number of full field dumps spread over the run (>= 2 keeps the
    /// first and last states).
    pub field_dumps: usize,
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { cadence: 100, field_dumps: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub schedule: ScheduleSection,
    pub u0: DataSpec,
    pub u1: DataSpec,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// All violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid.nx < 4 || !self.grid.nx.is_power_of_two() {
            problems.push(format!("grid.nx must be a power of two >= 4, got {}", self.grid.nx));
        }
        if self.grid.ny < 8 {
            problems.push(format!("grid.ny must be >= 8, got {}", self.grid.ny));
        }
        if !(self.grid.ymax > 0.0) {
            problems.push(format!("grid.ymax must be positive, got {}", self.grid.ymax));
        }
        if !(self.model.eta >= ETA_MIN && self.model.eta <= 1.0) {
            problems.push(format!(
                "model.eta must lie in [{ETA_MIN}, 1], got {}",
                self.model.eta
            ));
        }
        if !(self.model.ell >= 2.0) {
            problems.push(format!("model.ell must be >= 2, got {}", self.model.ell));
        }
        if !(self.schedule.rho0 > 0.0) {
            problems.push(format!("schedule.rho0 must be positive, got {}", self.schedule.rho0));
        }
        match &self.schedule.mu {
            MuSetting::Fixed(mu) if !(*mu > 0.0) => {
                problems.push(format!("schedule.mu must be positive, got {mu}"));
            }
            MuSetting::Auto(word) if word != "auto" => {
                problems.push(format!("schedule.mu must be a number or \"auto\", got {word:?}"));
            }
            _ => {}
        }
        if let Some(t) = self.schedule.t_final {
            if !(t > 0.0) {
                problems.push(format!("schedule.t_final must be positive, got {t}"));
            }
        }
        if !(self.schedule.cfl_safety > 0.0 && self.schedule.cfl_safety <= 1.0) {
            problems.push(format!(
                "schedule.cfl_safety must lie in (0, 1], got {}",
                self.schedule.cfl_safety
            ));
        }
        if !(self.schedule.dt_max > 0.0) {
            problems.push(format!("schedule.dt_max must be positive, got {}", self.schedule.dt_max));
        }
        if !(self.schedule.pilot_c >= 0.0) {
            problems.push(format!("schedule.pilot_c must be >= 0, got {}", self.schedule.pilot_c));
        }
        if self.norms.mmax == 0 || self.norms.kmax == 0 {
            problems.push(format!(
                "norms caps must be >= 1, got mmax={} kmax={}",
                self.norms.mmax, self.norms.kmax
            ));
        }
        if !(self.norms.tail_tol > 0.0) {
            problems.push(format!("norms.tail_tol must be positive, got {}", self.norms.tail_tol));
        }
        if self.output.cadence == 0 {
            problems.push("output.cadence must be >= 1".into());
        }
        if self.output.field_dumps < 2 {
            problems.push(format!(
                "output.field_dumps must be >= 2, got {}",
                self.output.field_dumps
            ));
        }
        if !self.u0.amplitude.is_finite() || !self.u1.amplitude.is_finite() {
            problems.push("data amplitudes must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Small sample config shared by the crate's tests.
#[cfg(test)]
pub(crate) const SAMPLE_CONFIG: &str = r#"
[grid]
nx = 16
ny = 32
ymax = 10.0

[model]
eta = 0.5
ell = 2.0

[schedule]
rho0 = 0.2
mu = 1.0

[u0]
family = "single_mode"
wavenumber = 1
phase = 0.0
amplitude = 1e-3

[u1]
family = "single_mode"
wavenumber = 1
phase = 0.0
amplitude = 0.0
"#;
