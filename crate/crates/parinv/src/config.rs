//! Scenario configuration: a single JSON document describing grid, term,
//! excitation, solver and experiment selection, plus builtin presets.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::{build_chi, BoundaryProfile};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridConfig, SpaceTimeGrid};
use crate::linearize::lambda_grid;
use crate::nonlinearity::{builtin_family, FamilyParams, SemilinearTerm};
use crate::solver::{Scheme, SolverOptions};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChiConfig {
    pub delta1: f64,
    #[serde(default = "default_delta2")]
    pub delta2_initial: f64,
    pub epsilon: f64,
}

fn default_delta2() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NonlinearityConfig {
    pub name: String,
    #[serde(default)]
    pub params: FamilyParams,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ToleranceConfig {
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_newton_iters")]
    pub max_newton_iters: usize,
    #[serde(default = "default_blowup_cap")]
    pub blowup_cap: f64,
}

fn default_newton_tol() -> f64 {
    1e-10
}
fn default_max_newton_iters() -> usize {
    25
}
fn default_blowup_cap() -> f64 {
    1e6
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            newton_tol: default_newton_tol(),
            max_newton_iters: default_max_newton_iters(),
            blowup_cap: default_blowup_cap(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Forward,
    Linearize,
    Constants,
    Reconstruct,
    Uniqueness,
    Stability,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Forward => "forward",
            Experiment::Linearize => "linearize",
            Experiment::Constants => "constants",
            Experiment::Reconstruct => "reconstruct",
            Experiment::Uniqueness => "uniqueness",
            Experiment::Stability => "stability",
        }
    }
}

/// One experiment scenario; hashes of the serialized form key the golden
/// files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridConfig,
    pub nonlinearity: NonlinearityConfig,
    pub chi: ChiConfig,
    pub r: f64,
    pub n_lambda: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    /// Observation horizon; the excitation plateau starts at delta1 < t1.
    pub t1: f64,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Recorded Hölder exponent metadata; not used numerically.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.5
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("cannot parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("scenario name is empty".into()));
        }
        builtin_family(&self.nonlinearity.name, &self.nonlinearity.params)
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.tolerances.newton_tol > 0.0 && self.tolerances.blowup_cap > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.tolerances.max_newton_iters == 0 {
            return Err(Error::Config("max_newton_iters must be >= 1".into()));
        }
        if !(self.chi.delta1 > 0.0 && self.chi.delta1 < self.t1) {
            return Err(Error::Config(format!(
                "need 0 < delta1 < t1, got delta1={} t1={}",
                self.chi.delta1, self.t1
            )));
        }
        if !(self.t1 <= self.grid.t_final + 1e-12) {
            return Err(Error::Config(format!(
                "horizon t1={} exceeds grid t_final={}",
                self.t1, self.grid.t_final
            )));
        }
        if !(self.chi.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        lambda_grid(self.r, self.n_lambda).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            scheme: self.scheme,
            newton_tol: self.tolerances.newton_tol,
            max_newton_iters: self.tolerances.max_newton_iters,
            blowup_cap: self.tolerances.blowup_cap,
        }
    }

    /// Materialize grid, term and excitation.
    pub fn build(&self) -> Result<(Arc<SpaceTimeGrid>, SemilinearTerm, BoundaryProfile)> {
        self.validate()?;
        let grid = build_grid(&self.grid)?;
        let term = builtin_family(&self.nonlinearity.name, &self.nonlinearity.params)?;
        let chi = build_chi(
            grid.clone(),
            self.chi.delta1,
            self.chi.delta2_initial,
            self.chi.epsilon,
            self.t1,
        )?;
        Ok((grid, term, chi))
    }
}

fn desk_grid_1d(nx: usize, nt: usize) -> GridConfig {
    GridConfig {
        dim: 1,
        extents: vec![1.0],
        nx: vec![nx],
        nt,
        t_final: 1.0,
    }
}

fn base(name: &str, family: &str, experiment: Experiment) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        grid: desk_grid_1d(49, 100),
        nonlinearity: NonlinearityConfig {
            name: family.to_string(),
            params: FamilyParams::default(),
        },
        chi: ChiConfig {
            delta1: 0.2,
            delta2_initial: 1.0,
            epsilon: 0.1,
        },
        r: 1.0,
        n_lambda: 21,
        scheme: Scheme::ImplicitEuler,
        tolerances: ToleranceConfig::default(),
        t1: 1.0,
        experiment,
        seed: 7,
        output_dir: None,
        alpha: 0.5,
    }
}

/// The builtin scenario presets behind `list-scenarios`.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    vec![
        base("forward_zero", "zero", Experiment::Forward),
        base("forward_cubic", "cubic_absorbing", Experiment::Forward),
        base("linearize_cubic", "cubic_absorbing", Experiment::Linearize),
        base("constants_default", "zero", Experiment::Constants),
        base("reconstruct_cubic", "cubic_absorbing", Experiment::Reconstruct),
        base("reconstruct_power_law", "power_law_fnon", Experiment::Reconstruct),
        base("uniqueness_cubic", "cubic_absorbing", Experiment::Uniqueness),
        base("stability_cubic", "cubic_absorbing", Experiment::Stability),
    ]
}

pub fn find_builtin(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}
