//! Run configuration: a TOML file whose every key is optional.
//!
//! ```toml
//! [instance]
//! links = "links.csv"
//! od = "od.csv"
//! budget = 900
//!
//! [cost]
//! bpr_alpha = 0.15
//! bpr_beta = 4
//! study_duration = 900
//!
//! [sa]
//! seed = 7
//! chains = 4
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use undp_core::{CostParams, GpConfig, SaParams, SplitBounds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Assign,
    Optimize,
    SignalsOnly,
    Sensitivity,
    Validate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Assign => "assign",
            Mode::Optimize => "optimize",
            Mode::SignalsOnly => "signals-only",
            Mode::Sensitivity => "sensitivity",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub instance: InstanceSection,
    pub cost: CostSection,
    pub splits: SplitSection,
    pub gp: GpSection,
    pub sa: SaSection,
    pub sensitivity: SensitivitySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: Mode,
    pub out: PathBuf,
    /// Solution file (solution.csv layout) to assign at in `assign` mode.
    pub solution: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { mode: Mode::Optimize, out: PathBuf::from("out"), solution: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSection {
    /// Bundled reference links when absent.
    pub links: Option<PathBuf>,
    /// Bundled reference demand when absent.
    pub od: Option<PathBuf>,
    pub budget: f64,
}

impl Default for InstanceSection {
    fn default() -> Self {
        InstanceSection { links: None, od: None, budget: crate::instance::REFERENCE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSection {
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
    #[serde(alias = "study_duration_T")]
    pub study_duration: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        let p = CostParams::default();
        CostSection { bpr_alpha: p.bpr_alpha, bpr_beta: p.bpr_beta, study_duration: p.study_duration }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub min: f64,
    pub max: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let b = SplitBounds::default();
        SplitSection { min: b.min, max: b.max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_size: f64,
    pub max_step_halvings: u32,
}

impl Default for GpSection {
    fn default() -> Self {
        let g = GpConfig::default();
        GpSection {
            tolerance: g.tolerance,
            max_iterations: g.max_iterations,
            step_size: g.step_size,
            max_step_halvings: g.max_step_halvings,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaSection {
    pub t_initial: Option<f64>,
    pub t_final: Option<f64>,
    pub iterations_per_temperature: usize,
    pub cooling_rate: f64,
    pub temperature_levels: usize,
    pub seed: u64,
    pub probe_moves: usize,
    pub probe_acceptance: f64,
    /// Independent chains run in parallel; chain `i` uses `seed + i`.
    pub chains: usize,
}

impl Default for SaSection {
    fn default() -> Self {
        let s = SaParams::default();
        SaSection {
            t_initial: s.t_initial,
            t_final: s.t_final,
            iterations_per_temperature: s.iterations_per_temperature,
            cooling_rate: s.cooling_rate,
            temperature_levels: s.temperature_levels,
            seed: s.seed,
            probe_moves: s.probe_moves,
            probe_acceptance: s.probe_acceptance,
            chains: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySection {
    /// Budgets as fractions of the cost of expanding every candidate.
    pub fractions: Vec<f64>,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        SensitivitySection { fractions: vec![0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0] }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams {
            bpr_alpha: self.cost.bpr_alpha,
            bpr_beta: self.cost.bpr_beta,
            study_duration: self.cost.study_duration,
            ..CostParams::default()
        }
    }

    pub fn gp_config(&self) -> GpConfig {
        GpConfig {
            tolerance: self.gp.tolerance,
            max_iterations: self.gp.max_iterations,
            step_size: self.gp.step_size,
            max_step_halvings: self.gp.max_step_halvings,
        }
    }

    pub fn sa_params(&self) -> SaParams {
        let s = &self.sa;
        SaParams {
            t_initial: s.t_initial,
            t_final: s.t_final,
            iterations_per_temperature: s.iterations_per_temperature,
            cooling_rate: s.cooling_rate,
            temperature_levels: s.temperature_levels,
            seed: s.seed,
            probe_moves: s.probe_moves,
            probe_acceptance: s.probe_acceptance,
        }
    }

    pub fn split_bounds(&self) -> Result<SplitBounds, ConfigError> {
        SplitBounds::new(self.splits.min, self.splits.max).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Checks every value the selected mode reads.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.instance.links.is_some() != self.instance.od.is_some() {
            return invalid("instance.links and instance.od must be given together".into());
        }
        if !(self.instance.budget.is_finite() && self.instance.budget >= 0.0) {
            return invalid(format!("instance.budget must be non-negative, got {}", self.instance.budget));
        }
        self.cost_params().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.split_bounds()?;
        self.gp_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.run.mode {
            Mode::Optimize | Mode::SignalsOnly | Mode::Sensitivity => {
                self.sa_params().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if self.sa.chains == 0 {
                    return invalid("sa.chains must be at least 1".into());
                }
            }
            Mode::Assign | Mode::Validate => {}
        }
        if self.run.mode == Mode::Sensitivity {
            let f = &self.sensitivity.fractions;
            if f.is_empty() {
                return invalid("sensitivity.fractions is empty".into());
            }
            if let Some(bad) = f.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return invalid(format!("sensitivity fraction {bad} is outside [0, 1]"));
            }
        }
        if self.run.solution.is_some() && self.run.mode != Mode::Assign {
            return invalid("run.solution is only read in assign mode".into());
        }
        Ok(())
    }
}
