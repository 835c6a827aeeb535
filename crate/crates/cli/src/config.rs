//! Run configuration: a TOML file with a `[scenario]` table plus one table
//! per subcommand. Unknown keys are errors, so a config that drifts from
//! the schema fails closed instead of silently running something else.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use popsim_core::{Axis, ThreeOpinionScenario, UtilityWeights, DEFAULT_ENUMERATION_BUDGET};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub equilibrium: Option<OutSection>,
    pub thresholds: Option<OutSection>,
    pub sweep: Option<SweepSection>,
    pub algorithms: Option<AlgorithmsSection>,
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub n: u32,
    pub g0: u32,
    pub w_pop: f64,
    pub w_align: f64,
    pub w_dist: f64,
    pub intensity_b: f64,
    pub density_a: f64,
    #[serde(default)]
    pub baseline: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutSection {
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmsSection {
    pub caps: Vec<u32>,
    #[serde(default)]
    pub g0_min: u32,
    pub g0_max: u32,
    #[serde(default = "default_g0_step")]
    pub g0_step: u32,
    pub out: Option<PathBuf>,
    /// Also print per-type utilities under post-viewer-match feeds. This
    /// accounting is one consistent completion of the visibility rule and
    /// not part of the analyzed model; see the library docs.
    #[serde(default)]
    pub experimental_pvm_welfare: bool,
}

fn default_g0_step() -> u32 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_small_n")]
    pub small_n: u32,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_max_opinions")]
    pub max_opinions: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_small_n() -> u32 {
    6
}
fn default_instances() -> usize {
    200
}
fn default_max_n() -> usize {
    6
}
fn default_max_opinions() -> usize {
    3
}
fn default_seed() -> u64 {
    42
}
fn default_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Result<ThreeOpinionScenario, CliError> {
        let s = &self.scenario;
        let weights = UtilityWeights::new(s.w_pop, s.w_align, s.w_dist)
            .and_then(|w| w.with_baseline(s.baseline))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        ThreeOpinionScenario::new(s.n, s.g0, weights, s.intensity_b, s.density_a)
            .map_err(|e| CliError::Validation(e.to_string()))
    }
}

impl SweepSection {
    pub fn axis(&self) -> Result<Axis, CliError> {
        Axis::parse(&self.axis).ok_or_else(|| {
            CliError::Config(format!(
                "unknown sweep axis {:?}; expected one of g0, d, intensity_b, density_a, w_pop",
                self.axis
            ))
        })
    }

    /// `min, min+step, ...` up to `max` inclusive (with a small tolerance
    /// against accumulation error).
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(CliError::Config("sweep step must be positive".into()));
        }
        if self.min > self.max {
            return Err(CliError::Config("sweep min must not exceed max".into()));
        }
        let mut grid = Vec::new();
        let mut i = 0u64;
        loop {
            let v = self.min + self.step * i as f64;
            if v > self.max + 1e-9 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        Ok(grid)
    }
}

impl AlgorithmsSection {
    pub fn g0_grid(&self) -> Result<Vec<u32>, CliError> {
        if self.g0_step == 0 {
            return Err(CliError::Config("g0_step must be positive".into()));
        }
        if self.g0_min > self.g0_max {
            return Err(CliError::Config("g0_min must not exceed g0_max".into()));
        }
        if self.caps.is_empty() {
            return Err(CliError::Config("caps must not be empty".into()));
        }
        Ok((self.g0_min..=self.g0_max)
            .step_by(self.g0_step as usize)
            .collect())
    }
}
