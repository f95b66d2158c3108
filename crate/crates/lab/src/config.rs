//! Experiment configuration documents.

use std::fs;
use std::path::{Path, PathBuf};

use dbr_core::catalog;
use dbr_core::domain::{make_scenario_amplification, make_scenario_linf_inconsistency, Scenario};
use dbr_core::offline::{make_amplification_mdp, make_random_offline_scenario, AmplificationMdpSpec, OfflineScenario};
use dbr_core::online::{
    make_coverage_family, make_random_episodic_scenario, CoverageFamilySpec, OnlineScenario, RandomEpisodicSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RegressionSweep,
    LowerBound,
    AdaptiveTau,
    StarLinf,
    OfflineRl,
    OnlineRl,
    Verify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RegressionSweep => "regression_sweep",
            ExperimentKind::LowerBound => "lower_bound",
            ExperimentKind::AdaptiveTau => "adaptive_tau",
            ExperimentKind::StarLinf => "star_linf",
            ExperimentKind::OfflineRl => "offline_rl",
            ExperimentKind::OnlineRl => "online_rl",
            ExperimentKind::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationParams {
    pub eps_inf: f64,
    pub c_inf: f64,
    pub zeta: f64,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomOfflineParams {
    pub states: usize,
    pub actions: usize,
    pub gamma: f64,
    pub members: usize,
    pub seed: u64,
}

/// Where the scenario comes from. Files are resolved relative to the
/// config file and are only ever read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    File(PathBuf),
    Amplification(AmplificationParams),
    LinfInconsistency,
    Benchmark,
    Realizable,
    RandomShift { seed: u64 },
    Inline(Box<Scenario>),
    AmplificationMdp(AmplificationMdpSpec),
    RandomOffline(RandomOfflineParams),
    InlineOffline(Box<OfflineScenario>),
    RandomEpisodic(RandomEpisodicSpec),
    CoverageFamily(CoverageFamilySpec),
    InlineOnline(Box<OnlineScenario>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// `tau_factor · ε∞` of the scenario.
    Misspecification,
    /// `√(log(|F|/δ)/n)`.
    Rate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Value(f64),
    Rule(TauRule),
}

impl Default for TauSpec {
    fn default() -> Self {
        TauSpec::Rule(TauRule::Misspecification)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub tau: TauSpec,
    pub tau_factor: f64,
    pub delta: f64,
    /// Fixed version-space threshold; otherwise `beta_c·log(T·H·|F|/δ)`.
    pub beta: Option<f64>,
    pub beta_c: f64,
    /// Run only the filtered (`true`) or unfiltered (`false`) variant;
    /// both when absent.
    pub filtered: Option<bool>,
    pub alpha_grid: usize,
    /// Track the reference member's survival in online runs.
    pub track_reference: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            tau: TauSpec::default(),
            tau_factor: 3.0,
            delta: 0.1,
            beta: None,
            beta_c: 4.0,
            filtered: None,
            alpha_grid: 101,
            track_reference: true,
        }
    }
}

impl Params {
    pub fn resolve_tau(&self, eps_inf: f64, class_size: usize, n: usize) -> f64 {
        match self.tau {
            TauSpec::Value(t) => t,
            TauSpec::Rule(TauRule::Misspecification) => self.tau_factor * eps_inf,
            TauSpec::Rule(TauRule::Rate) => ((class_size as f64 / self.delta).ln() / n as f64).sqrt(),
        }
    }

    pub fn variants(&self) -> Vec<bool> {
        match self.filtered {
            Some(f) => vec![f],
            None => vec![true, false],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSource>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    /// Episodes per online run.
    #[serde(default)]
    pub episodes: Option<usize>,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; relative scenario paths are rebased
    /// onto the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(ScenarioSource::File(file)) = &mut cfg.scenario {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(LabError::Config(msg));
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return fail(format!("id {:?} must be a non-empty file stem", self.id));
        }
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if self.n_grid.contains(&0) {
            return fail("n_grid entries must be positive".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("n_grid must be strictly increasing".into());
        }
        let p = &self.params;
        if p.delta.is_nan() || p.delta <= 0.0 || p.delta >= 1.0 {
            return fail(format!("delta = {} not in (0, 1)", p.delta));
        }
        if p.tau_factor < 0.0 || matches!(p.tau, TauSpec::Value(t) if t.is_nan() || t < 0.0) {
            return fail("tau must be non-negative".into());
        }
        if p.beta.is_some_and(|b| b.is_nan() || b < 0.0) || p.beta_c.is_nan() || p.beta_c <= 0.0 {
            return fail("beta and beta_c must be non-negative".into());
        }
        if p.alpha_grid < 2 {
            return fail("alpha_grid needs at least two points".into());
        }
        use ExperimentKind::*;
        match self.kind {
            Verify => {}
            _ if self.scenario.is_none() => return fail(format!("{} needs a scenario", self.kind.name())),
            RegressionSweep | AdaptiveTau | OfflineRl if self.n_grid.is_empty() => {
                return fail(format!("{} needs a non-empty n_grid", self.kind.name()))
            }
            OnlineRl if self.episodes.map_or(true, |t| t == 0) => {
                return fail("online_rl needs a positive episode count".into())
            }
            OnlineRl if self.n_grid.last().is_some_and(|&n| Some(n) > self.episodes) => {
                return fail("online checkpoints must not exceed the episode count".into())
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// A resolved scenario of the family the experiment kind needs.
pub enum LoadedScenario {
    Regression(Scenario),
    Offline(OfflineScenario),
    Online(OnlineScenario),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Regression,
    Offline,
    Online,
}

fn scenario_error(e: impl std::fmt::Display) -> LabError {
    LabError::Scenario(e.to_string())
}

pub fn load_scenario(source: &ScenarioSource, family: Family) -> Result<LoadedScenario> {
    use ScenarioSource as S;
    let loaded = match source {
        S::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
            match family {
                Family::Regression => LoadedScenario::Regression(Scenario::from_json(&text).map_err(scenario_error)?),
                Family::Offline => LoadedScenario::Offline(OfflineScenario::from_json(&text).map_err(scenario_error)?),
                Family::Online => LoadedScenario::Online(OnlineScenario::from_json(&text).map_err(scenario_error)?),
            }
        }
        S::Amplification(a) => LoadedScenario::Regression(
            make_scenario_amplification(a.eps_inf, a.c_inf, a.zeta, a.m).map_err(scenario_error)?,
        ),
        S::LinfInconsistency => LoadedScenario::Regression(make_scenario_linf_inconsistency()),
        S::Benchmark => LoadedScenario::Regression(catalog::benchmark_scenario()),
        S::Realizable => LoadedScenario::Regression(catalog::realizable_scenario()),
        S::RandomShift { seed } => LoadedScenario::Regression(catalog::random_shift_scenario(*seed)),
        S::Inline(s) => LoadedScenario::Regression((**s).clone()),
        S::AmplificationMdp(spec) => LoadedScenario::Offline(make_amplification_mdp(spec).map_err(scenario_error)?),
        S::RandomOffline(p) => LoadedScenario::Offline(
            make_random_offline_scenario(p.states, p.actions, p.gamma, p.members, p.seed).map_err(scenario_error)?,
        ),
        S::InlineOffline(s) => LoadedScenario::Offline((**s).clone()),
        S::RandomEpisodic(spec) => {
            LoadedScenario::Online(make_random_episodic_scenario(spec).map_err(scenario_error)?)
        }
        S::CoverageFamily(spec) => LoadedScenario::Online(make_coverage_family(spec).map_err(scenario_error)?),
        S::InlineOnline(s) => LoadedScenario::Online((**s).clone()),
    };
    let got = match loaded {
        LoadedScenario::Regression(_) => Family::Regression,
        LoadedScenario::Offline(_) => Family::Offline,
        LoadedScenario::Online(_) => Family::Online,
    };
    if got != family {
        return Err(LabError::Config(format!(
            "scenario source gives a {got:?} scenario but the experiment needs {family:?}"
        )));
    }
    Ok(loaded)
}
