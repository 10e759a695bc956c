//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Cool,
    SweepDim,
    SweepEnergy,
    Network,
    Hybrid,
    Gaussian,
    OptTime,
    Prep,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Cool,
        Experiment::SweepDim,
        Experiment::SweepEnergy,
        Experiment::Network,
        Experiment::Hybrid,
        Experiment::Gaussian,
        Experiment::OptTime,
        Experiment::Prep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Cool => "cool",
            Experiment::SweepDim => "sweep-dim",
            Experiment::SweepEnergy => "sweep-energy",
            Experiment::Network => "network",
            Experiment::Hybrid => "hybrid",
            Experiment::Gaussian => "gaussian",
            Experiment::OptTime => "opt-time",
            Experiment::Prep => "prep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Cool => "one cooling run; per-cycle trace (cycle,F,P,FP_product)",
            Experiment::SweepDim => "single oscillator over regulator sizes and levels (d,k,N,F,P)",
            Experiment::SweepEnergy => "cycles needed against initial energy along nbar (energy,N,F,P)",
            Experiment::Network => "linear or star network over regulator sizes (d,k,N,F,P)",
            Experiment::Hybrid => "oscillator plus system qudit over regulator sizes (d,k,N,F,P)",
            Experiment::Gaussian => "Gaussian one-shot cooling over a state grid",
            Experiment::OptTime => "optimal cycle time per regulator level (k,t_opt,residual)",
            Experiment::Prep => "state preparation on the cooled hybrid ground state",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Displaced squeezed thermal state of each oscillator mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub alpha: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    pub nbar: f64,
    /// Fock cutoff per mode.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

fn default_cutoff() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKindConfig {
    Single,
    Linear,
    Star,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegulatorKindConfig {
    #[default]
    Qudit,
    Oscillator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKindConfig,
    /// Number of oscillators for linear and star networks.
    #[serde(default = "one")]
    pub modes: usize,
    /// Levels of the system qudit in the hybrid setup.
    #[serde(default = "two")]
    pub system_levels: usize,
    #[serde(default)]
    pub regulator: RegulatorKindConfig,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

/// Regulator sizes `d` and measured levels `k`; pairs with `k >= d` are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorConfig {
    pub d: Vec<usize>,
    pub k: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Report {
    /// Converged cycle, or `n_max`.
    #[default]
    Converged,
    /// Converged cycle, else the first fidelity plateau, else `n_max`.
    Saturation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Cycle time; defaults to the optimal time of the measured level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_time: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_target")]
    pub fidelity_target: f64,
    #[serde(default = "default_floor")]
    pub probability_floor: f64,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
    #[serde(default)]
    pub report: Report,
}

fn default_n_max() -> usize {
    100
}

fn default_target() -> f64 {
    0.999
}

fn default_floor() -> f64 {
    0.1
}

fn default_tol() -> f64 {
    1e-3
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            cycle_time: None,
            n_max: default_n_max(),
            fidelity_target: default_target(),
            probability_floor: default_floor(),
            convergence_tol: default_tol(),
            report: Report::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Thermal occupations to evaluate; displacement and squeezing come from `[state]`.
    pub nbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub r: Vec<f64>,
    pub nbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptTimeConfig {
    pub k: Vec<usize>,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_residual")]
    pub tol: f64,
    /// Prefer an admissible optimum within 1% of this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefer_near: Option<f64>,
}

fn default_window() -> [f64; 2] {
    [0.0, 250.0]
}

fn default_grid_step() -> f64 {
    1e-3
}

fn default_residual() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrepKind {
    Cat,
    OddCat,
    HybridEntangled,
    Noon,
}

impl PrepKind {
    pub fn name(self) -> &'static str {
        match self {
            PrepKind::Cat => "cat",
            PrepKind::OddCat => "odd-cat",
            PrepKind::HybridEntangled => "hybrid-entangled",
            PrepKind::Noon => "noon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    pub kinds: Vec<PrepKind>,
    /// Qudit sizes; cats use `N = d` components and need even `d`.
    pub d: Vec<usize>,
    /// Cat amplitude (real).
    #[serde(default = "default_cat_alpha")]
    pub alpha: f64,
    /// Squeezing assists for hybrid entanglement.
    #[serde(default = "default_squeeze")]
    pub r: Vec<f64>,
    #[serde(default = "default_prep_cutoff")]
    pub cutoff: usize,
}

fn default_cat_alpha() -> f64 {
    1.2
}

fn default_squeeze() -> Vec<f64> {
    vec![0.0]
}

fn default_prep_cutoff() -> usize {
    40
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// CSV destination, relative to the working directory.
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regulator: Option<RegulatorConfig>,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_time: Option<OptTimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<PrepConfig>,
}

fn missing(section: &str, exp: Experiment) -> CliError {
    CliError::Config(format!("experiment `{exp}` needs a [{section}] section"))
}

fn nonempty<T>(key: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Config(format!("empty grid: `{key}` lists no values")))
    } else {
        Ok(())
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical serialisation: every default spelled out, fixed key order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configs always serialise")
    }

    pub fn state(&self) -> Result<&StateConfig, CliError> {
        self.state.as_ref().ok_or_else(|| missing("state", self.experiment))
    }

    pub fn topology(&self) -> Result<&TopologyConfig, CliError> {
        self.topology.as_ref().ok_or_else(|| missing("topology", self.experiment))
    }

    pub fn regulator(&self) -> Result<&RegulatorConfig, CliError> {
        self.regulator.as_ref().ok_or_else(|| missing("regulator", self.experiment))
    }

    /// Schema checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        let exp = self.experiment;
        let p = &self.protocol;
        check(p.n_max >= 1, || "protocol.n_max must be at least 1".into())?;
        check((0.0..=1.0).contains(&p.fidelity_target), || {
            format!("protocol.fidelity_target must lie in [0, 1], got {}", p.fidelity_target)
        })?;
        check((0.0..=1.0).contains(&p.probability_floor), || {
            format!("protocol.probability_floor must lie in [0, 1], got {}", p.probability_floor)
        })?;
        check(p.convergence_tol > 0.0, || "protocol.convergence_tol must be positive".into())?;
        if let Some(t) = p.cycle_time {
            check(t.is_finite(), || "protocol.cycle_time must be finite".into())?;
        }
        if let Some(s) = &self.state {
            check(s.alpha >= 0.0 && s.r >= 0.0 && s.nbar >= 0.0, || {
                "state.alpha, state.r and state.nbar must be non-negative".into()
            })?;
            check(s.cutoff >= 2, || "state.cutoff must be at least 2".into())?;
        }
        if let Some(r) = &self.regulator {
            nonempty("regulator.d", &r.d)?;
            nonempty("regulator.k", &r.k)?;
            check(r.d.iter().all(|&d| d >= 2), || "regulator.d values must be at least 2".into())?;
            check(r.d.iter().any(|&d| r.k.iter().any(|&k| k < d)), || {
                "empty grid: no (d, k) pair with k < d".into()
            })?;
        }
        match exp {
            Experiment::Cool | Experiment::SweepDim | Experiment::Network | Experiment::Hybrid => {
                self.state()?;
                self.regulator()?;
                let topo = self.topology.clone().unwrap_or(TopologyConfig {
                    kind: TopologyKindConfig::Single,
                    modes: 1,
                    system_levels: 2,
                    regulator: RegulatorKindConfig::Qudit,
                });
                match (exp, topo.kind) {
                    (Experiment::Network, TopologyKindConfig::Linear | TopologyKindConfig::Star) => {}
                    (Experiment::Network, _) => {
                        return Err(CliError::Config("network experiments need topology.kind = linear or star".into()))
                    }
                    (Experiment::Hybrid, TopologyKindConfig::Hybrid) => {}
                    (Experiment::Hybrid, _) => {
                        return Err(CliError::Config("hybrid experiments need topology.kind = hybrid".into()))
                    }
                    (Experiment::SweepDim, k) if k != TopologyKindConfig::Single => {
                        return Err(CliError::Config("sweep-dim runs a single oscillator; use network or hybrid".into()))
                    }
                    _ => {}
                }
                check(topo.modes >= 1, || "topology.modes must be at least 1".into())?;
                check(topo.system_levels >= 2, || "topology.system_levels must be at least 2".into())?;
            }
            Experiment::SweepEnergy => {
                self.state()?;
                let r = self.regulator()?;
                check(r.d.iter().all(|&d| d >= 3), || "sweep-energy needs regulator.d >= 3".into())?;
                let e = self.energy.as_ref().ok_or_else(|| missing("energy", exp))?;
                nonempty("energy.nbar", &e.nbar)?;
                check(e.nbar.iter().all(|&x| x >= 0.0 && x.is_finite()), || {
                    "energy.nbar values must be finite and non-negative".into()
                })?;
            }
            Experiment::Gaussian => {
                let g = self.gaussian.as_ref().ok_or_else(|| missing("gaussian", exp))?;
                nonempty("gaussian.alpha1", &g.alpha1)?;
                nonempty("gaussian.alpha2", &g.alpha2)?;
                nonempty("gaussian.r", &g.r)?;
                nonempty("gaussian.nbar", &g.nbar)?;
                check(g.r.iter().chain(&g.nbar).all(|&x| x >= 0.0), || {
                    "gaussian.r and gaussian.nbar must be non-negative".into()
                })?;
            }
            Experiment::OptTime => {
                let o = self.opt_time.as_ref().ok_or_else(|| missing("opt_time", exp))?;
                nonempty("opt_time.k", &o.k)?;
                check(o.window[0] < o.window[1], || "opt_time.window must be increasing".into())?;
                check(o.grid_step > 0.0 && o.tol > 0.0, || {
                    "opt_time.grid_step and opt_time.tol must be positive".into()
                })?;
            }
            Experiment::Prep => {
                let p = self.prep.as_ref().ok_or_else(|| missing("prep", exp))?;
                nonempty("prep.kinds", &p.kinds)?;
                nonempty("prep.d", &p.d)?;
                nonempty("prep.r", &p.r)?;
                check(p.d.iter().all(|&d| d >= 2), || "prep.d values must be at least 2".into())?;
                check(p.r.iter().all(|&r| r >= 0.0), || "prep.r values must be non-negative".into())?;
            }
        }
        Ok(())
    }
}
