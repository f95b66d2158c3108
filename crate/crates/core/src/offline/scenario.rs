//! Bundled offline instances: the amplification family and random MDPs.

use serde::{Deserialize, Serialize};

use super::{
    bellman_backup, concentrability, rl_misspec_level, transfer_coefficient, uniform_in, value_iteration,
    DiscountedMDP, QClass, QTable, SaDistribution,
};
use crate::error::{precondition, DbrError, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineDiagnostics {
    pub eps_inf: f64,
    pub c_conc: f64,
    pub c_transfer: f64,
}

/// MDP, data distribution and class, with their coverage diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OfflineScenarioRepr")]
pub struct OfflineScenario {
    mdp: DiscountedMDP,
    mu: SaDistribution,
    class: QClass,
    diagnostics: OfflineDiagnostics,
}

#[derive(Deserialize)]
struct OfflineScenarioRepr {
    mdp: DiscountedMDP,
    mu: SaDistribution,
    class: QClass,
    diagnostics: OfflineDiagnostics,
}

impl TryFrom<OfflineScenarioRepr> for OfflineScenario {
    type Error = DbrError;
    fn try_from(r: OfflineScenarioRepr) -> Result<Self> {
        let s = OfflineScenario::new(r.mdp, r.mu, r.class).map_err(|e| DbrError::ScenarioError(e.to_string()))?;
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        let (d, c) = (s.diagnostics, r.diagnostics);
        if !(same(d.eps_inf, c.eps_inf) && same(d.c_conc, c.c_conc) && same(d.c_transfer, c.c_transfer)) {
            return Err(DbrError::ScenarioError(format!(
                "cached diagnostics {c:?} disagree with recomputed {d:?}"
            )));
        }
        Ok(s)
    }
}

impl OfflineScenario {
    pub fn new(mdp: DiscountedMDP, mu: SaDistribution, class: QClass) -> Result<Self> {
        class.check_for(&mdp)?;
        let diagnostics = OfflineDiagnostics {
            eps_inf: rl_misspec_level(&class, &mdp),
            c_conc: concentrability(&mu, &class, &mdp)?,
            c_transfer: transfer_coefficient(&mu, &class, &mdp)?,
        };
        Ok(Self {
            mdp,
            mu,
            class,
            diagnostics,
        })
    }

    pub fn mdp(&self) -> &DiscountedMDP {
        &self.mdp
    }
    pub fn mu(&self) -> &SaDistribution {
        &self.mu
    }
    pub fn class(&self) -> &QClass {
        &self.class
    }
    pub fn diagnostics(&self) -> OfflineDiagnostics {
        self.diagnostics
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DbrError::ScenarioError(e.to_string()))
    }
}

/// Parameters of the amplification MDP family.
///
/// States are a block `B` that the evaluation policies start in, an
/// off-block `O` that soaks up most of the data, and an absorbing zero-reward
/// sink `z`. Every transition leads to `z`, so `Tf = Q*` for any `f` that
/// vanishes on `z`, and Bellman errors are plain deviations from `Q*`.
///
/// The data put mass `2(1 − γ)/C` on `B × A`, which makes the
/// concentrability of the greedy policies exactly `C`. The class holds
/// `f̄ = Q* ± ε` and `f_bad`, which is `Q*` plus `ζ` on the wrong action of
/// every block state, with `ζ` just below the point where the two have
/// equal squared Bellman error under the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplificationMdpSpec {
    pub c_conc: f64,
    pub eps: f64,
    pub gamma: f64,
    pub block: usize,
    pub off_block: usize,
    /// Make the last block state a near tie (action gap `ε`) on which `f̄`
    /// prefers the wrong action, giving the filtered fit a nonzero floor.
    pub near_tie: bool,
    /// `ζ` as a fraction of the equal-error threshold.
    pub margin: f64,
}

impl Default for AmplificationMdpSpec {
    fn default() -> Self {
        Self {
            c_conc: 16.0,
            eps: 0.05,
            gamma: 0.9,
            block: 4,
            off_block: 4,
            near_tie: true,
            margin: 0.95,
        }
    }
}

impl AmplificationMdpSpec {
    /// Shift that `f_bad` puts on the wrong block actions.
    pub fn zeta(&self) -> f64 {
        self.margin * (self.c_conc / (2.0 * (1.0 - self.gamma))).sqrt() * self.eps
    }
}

pub fn make_amplification_mdp(spec: &AmplificationMdpSpec) -> Result<OfflineScenario> {
    let AmplificationMdpSpec {
        c_conc,
        eps,
        gamma,
        block,
        off_block,
        near_tie,
        margin,
    } = *spec;
    precondition(eps > 0.0 && eps <= 0.25, || format!("eps = {eps} not in (0, 1/4]"))?;
    precondition((0.0..1.0).contains(&gamma), || format!("gamma = {gamma} not in [0, 1)"))?;
    precondition(block >= 1 && off_block >= 1, || "block and off-block need a state each".into())?;
    precondition(margin > 0.0 && margin < 1.0, || format!("margin = {margin} not in (0, 1)"))?;
    let w = 2.0 * (1.0 - gamma) / c_conc;
    precondition(c_conc >= 2.0 * gamma && w <= 0.5, || {
        format!("c_conc = {c_conc} too small for gamma = {gamma}")
    })?;
    let zeta = spec.zeta();
    let gap = zeta - eps;
    precondition(gap > 0.0 && gap <= 1.0, || format!("zeta = {zeta} gives action gap {gap} outside (0, 1]"))?;

    let states = block + off_block + 1;
    let sink = states - 1;
    let tie_state = if near_tie { Some(block - 1) } else { None };
    let mut r = vec![vec![0.0; 2]; states];
    for (s, row) in r.iter_mut().enumerate().take(block) {
        let g = if Some(s) == tie_state { eps } else { gap };
        *row = vec![0.5 + g / 2.0, 0.5 - g / 2.0];
    }
    for row in r.iter_mut().take(block + off_block).skip(block) {
        *row = vec![0.5, 0.3];
    }
    let to_sink: Vec<f64> = (0..states).map(|t| if t == sink { 1.0 } else { 0.0 }).collect();
    let p = vec![vec![to_sink.clone(); 2]; states];
    let d0: Vec<f64> = (0..states).map(|s| if s < block { 1.0 / block as f64 } else { 0.0 }).collect();
    let mdp = DiscountedMDP::new(p, r, d0, gamma)?;

    let q_star = bellman_backup(&QTable::zeros(states, 2), &mdp);
    let mut f_bar = q_star.values().to_vec();
    let mut f_bad = q_star.values().to_vec();
    for s in 0..sink {
        for a in 0..2 {
            let sign = if Some(s) == tie_state && a == 0 { -1.0 } else { 1.0 };
            f_bar[s * 2 + a] += sign * eps;
        }
        if s < block {
            f_bad[s * 2 + 1] += zeta;
        }
    }
    let class = QClass::new(vec![
        QTable::from_flat(states, 2, f_bar)?,
        QTable::from_flat(states, 2, f_bad)?,
    ])?;

    let mut mu = vec![0.0; states * 2];
    mu[sink * 2] = 0.5;
    for s in 0..block {
        mu[s * 2] = w / (2.0 * block as f64);
        mu[s * 2 + 1] = w / (2.0 * block as f64);
    }
    let off_mass = (0.5 - w) / (2.0 * off_block as f64);
    for s in block..sink {
        mu[s * 2] = off_mass;
        mu[s * 2 + 1] = off_mass;
    }
    let mu = SaDistribution::from_flat(states, 2, mu)?;
    OfflineScenario::new(mdp, mu, class)
}

/// Dense random MDP with a class of perturbed `Q*` tables and a
/// full-support data distribution.
pub fn make_random_offline_scenario(
    states: usize,
    actions: usize,
    gamma: f64,
    members: usize,
    seed: u64,
) -> Result<OfflineScenario> {
    precondition(members >= 1, || "class needs a member".into())?;
    let mut rng = rng::stream(seed);
    let row = |len: usize, rng: &mut rng::StreamRng| -> Vec<f64> {
        let w: Vec<f64> = (0..len).map(|_| uniform_in(rng, 0.05, 1.0)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let p = (0..states)
        .map(|_| (0..actions).map(|_| row(states, &mut rng)).collect())
        .collect();
    let r = (0..states)
        .map(|_| (0..actions).map(|_| uniform_in(&mut rng, 0.0, 1.0)).collect())
        .collect();
    let d0 = row(states, &mut rng);
    let mdp = DiscountedMDP::new(p, r, d0, gamma)?;
    let q_star = value_iteration(&mdp);
    let v_max = mdp.v_max();
    let class = (0..members)
        .map(|k| {
            let scale = 0.05 * (k + 1) as f64;
            let values = q_star
                .values()
                .iter()
                .map(|&q| (q + uniform_in(&mut rng, -scale, scale)).clamp(0.0, v_max))
                .collect();
            QTable::from_flat(states, actions, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mu = SaDistribution::from_flat(states, actions, row(states * actions, &mut rng))?;
    OfflineScenario::new(mdp, mu, QClass::new(class)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_concentrability_matches_design() {
        for c in [4.0, 16.0, 64.0] {
            let s = make_amplification_mdp(&AmplificationMdpSpec {
                c_conc: c,
                ..Default::default()
            })
            .unwrap();
            let d = s.diagnostics();
            assert!((d.c_conc - c).abs() < 1e-9 * c, "C = {c}: {}", d.c_conc);
            assert!((d.eps_inf - 0.05).abs() < 1e-12);
            assert!(d.c_transfer <= d.c_conc);
        }
    }

    #[test]
    fn offline_scenario_json_round_trip() {
        let s = make_random_offline_scenario(4, 2, 0.8, 3, 9).unwrap();
        let back = OfflineScenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }
}
