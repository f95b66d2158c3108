//! Episodic instances with product classes built backward from zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{coverability, episodic_backup, EpisodicMDP, ProductQClass};
use crate::error::{precondition, DbrError, Result};
use crate::offline::QTable;
use crate::rng;

/// Rounds to the nearest multiple of `q` and clamps to `[0, 1]`; `q = 0`
/// only clamps.
pub fn quantize(v: f64, q: f64) -> f64 {
    let r = if q > 0.0 { (v / q).round() * q } else { v };
    r.clamp(0.0, 1.0)
}

fn quantize_table(t: &QTable, q: f64) -> QTable {
    let values = t.values().iter().map(|&v| quantize(v, q)).collect();
    QTable::from_flat(t.states(), t.actions(), values).expect("quantized table is finite")
}

/// Episodic completeness level,
/// `max_h max_{f' ∈ F_{h+1}} min_{f ∈ F_h} ‖f − T_h f'‖_∞`.
pub fn completeness_level(class: &ProductQClass, mdp: &EpisodicMDP) -> f64 {
    let h_max = class.horizon();
    let zero = [QTable::zeros(mdp.states(), mdp.actions())];
    (0..h_max)
        .map(|h| {
            let next: &[QTable] = if h + 1 < h_max { class.step(h + 1) } else { &zero };
            next.iter()
                .map(|f_next| {
                    let target = episodic_backup(f_next, mdp, h);
                    class
                        .step(h)
                        .iter()
                        .map(|f| f.sup_distance(&target))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineDiagnostics {
    pub eps_inf: f64,
    pub c_cov: f64,
    pub product_size: usize,
}

/// Recipe for a product class: each step holds the quantized backups of
/// the next step's members followed by the distractors, deduplicated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineSpec {
    pub mdp: EpisodicMDP,
    pub quantization: f64,
    pub distractors: Vec<Vec<QTable>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OnlineScenarioRepr")]
pub struct OnlineScenario {
    mdp: EpisodicMDP,
    class: ProductQClass,
    /// Grid step used when the class was built; not re-checked on load.
    quantization: f64,
    diagnostics: OnlineDiagnostics,
}

#[derive(Deserialize)]
struct OnlineScenarioRepr {
    mdp: EpisodicMDP,
    class: ProductQClass,
    quantization: f64,
    diagnostics: OnlineDiagnostics,
}

impl TryFrom<OnlineScenarioRepr> for OnlineScenario {
    type Error = DbrError;
    fn try_from(r: OnlineScenarioRepr) -> Result<Self> {
        let s = OnlineScenario::new(r.mdp, r.class, r.quantization).map_err(|e| DbrError::ScenarioError(e.to_string()))?;
        let (d, c) = (s.diagnostics, r.diagnostics);
        if !(d.eps_inf.to_bits() == c.eps_inf.to_bits()
            && d.c_cov.to_bits() == c.c_cov.to_bits()
            && d.product_size == c.product_size)
        {
            return Err(DbrError::ScenarioError(format!(
                "cached diagnostics {c:?} disagree with recomputed {d:?}"
            )));
        }
        Ok(s)
    }
}

impl OnlineScenario {
    pub fn new(mdp: EpisodicMDP, class: ProductQClass, quantization: f64) -> Result<Self> {
        precondition(quantization >= 0.0, || "quantization step must be non-negative".into())?;
        class.check_for(&mdp)?;
        class.check_enumerable()?;
        let diagnostics = OnlineDiagnostics {
            eps_inf: completeness_level(&class, &mdp),
            c_cov: coverability(&class, &mdp)?.value,
            product_size: class.product_size(),
        };
        Ok(Self {
            mdp,
            class,
            quantization,
            diagnostics,
        })
    }

    pub fn mdp(&self) -> &EpisodicMDP {
        &self.mdp
    }
    pub fn class(&self) -> &ProductQClass {
        &self.class
    }
    pub fn diagnostics(&self) -> OnlineDiagnostics {
        self.diagnostics
    }
    pub fn quantization(&self) -> f64 {
        self.quantization
    }

    /// The quantized backup chain sits at index 0 of every step.
    pub fn reference_member(&self) -> Vec<usize> {
        vec![0; self.class.horizon()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DbrError::ScenarioError(e.to_string()))
    }
}

pub fn make_online_scenario(spec: &OnlineSpec) -> Result<OnlineScenario> {
    let mdp = &spec.mdp;
    let h_max = mdp.horizon();
    precondition(spec.quantization >= 0.0, || "quantization step must be non-negative".into())?;
    precondition(spec.distractors.len() == h_max, || "need a distractor list per step".into())?;
    let mut per_step: Vec<Vec<QTable>> = vec![Vec::new(); h_max];
    let mut next = vec![QTable::zeros(mdp.states(), mdp.actions())];
    for h in (0..h_max).rev() {
        let mut step: Vec<QTable> = Vec::new();
        let backups = next.iter().map(|f| quantize_table(&episodic_backup(f, mdp, h), spec.quantization));
        let extras = spec.distractors[h].iter().map(|d| {
            let values = d.values().iter().map(|v| v.clamp(0.0, 1.0)).collect();
            QTable::from_flat(d.states(), d.actions(), values)
        });
        for t in backups.map(Ok).chain(extras) {
            let t = t?;
            precondition(t.states() == mdp.states() && t.actions() == mdp.actions(), || {
                format!("distractor at step {h} has the wrong shape")
            })?;
            if !step.contains(&t) {
                step.push(t);
            }
        }
        let size = step.len().saturating_mul(per_step[h + 1..].iter().map(Vec::len).product());
        if size > super::PRODUCT_LIMIT {
            return Err(DbrError::ClassTooLarge {
                size,
                limit: super::PRODUCT_LIMIT,
            });
        }
        next = step.clone();
        per_step[h] = step;
    }
    OnlineScenario::new(mdp.clone(), ProductQClass::new(per_step)?, spec.quantization)
}

/// The quantized backup chain starting from the zero table.
fn reference_chain(mdp: &EpisodicMDP, q: f64) -> Vec<QTable> {
    let mut out = vec![QTable::zeros(mdp.states(), mdp.actions()); mdp.horizon()];
    let mut next = QTable::zeros(mdp.states(), mdp.actions());
    for h in (0..mdp.horizon()).rev() {
        next = quantize_table(&episodic_backup(&next, mdp, h), q);
        out[h] = next.clone();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomEpisodicSpec {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub distractors_per_step: usize,
    /// Even-numbered distractors lift a non-greedy action of a random state
    /// this far above the reference row maximum; odd ones lower a random
    /// entry by the same amount.
    pub bump: f64,
    pub quantization: f64,
    pub seed: u64,
}

impl Default for RandomEpisodicSpec {
    fn default() -> Self {
        Self {
            states: 4,
            actions: 2,
            horizon: 3,
            distractors_per_step: 2,
            bump: 0.3,
            quantization: 0.0,
            seed: 0,
        }
    }
}

/// Dense random dynamics, rewards uniform on `[0, 1/H]`, and distractors
/// that either switch the reference chain's greedy action at one state
/// optimistically (the start state at step 0) or understate one entry.
pub fn make_random_episodic_scenario(spec: &RandomEpisodicSpec) -> Result<OnlineScenario> {
    let RandomEpisodicSpec {
        states,
        actions,
        horizon,
        distractors_per_step,
        bump,
        quantization,
        seed,
    } = *spec;
    precondition(states >= 1 && actions >= 1 && horizon >= 1, || "empty episodic instance".into())?;
    let mut rng = rng::stream(seed);
    let cap = 1.0 / horizon as f64;
    let mut p = Vec::with_capacity(horizon);
    let mut r = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut p_h = Vec::with_capacity(states);
        let mut r_h = Vec::with_capacity(states);
        for _ in 0..states {
            let mut p_s = Vec::with_capacity(actions);
            let mut r_s = Vec::with_capacity(actions);
            for _ in 0..actions {
                let w: Vec<f64> = (0..states).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = w.iter().sum();
                p_s.push(w.into_iter().map(|x| x / total).collect());
                r_s.push(rng.random::<f64>() * cap);
            }
            p_h.push(p_s);
            r_h.push(r_s);
        }
        p.push(p_h);
        r.push(r_h);
    }
    let mdp = EpisodicMDP::new(p, r, 0)?;
    let chain = reference_chain(&mdp, quantization);
    let distractors = chain
        .iter()
        .enumerate()
        .map(|(h, f)| {
            (0..distractors_per_step)
                .map(|d| {
                    let mut values = f.values().to_vec();
                    let s = if h == 0 { mdp.s1() } else { rng.random_range(0..states) };
                    let row = s * actions;
                    if d % 2 == 0 && actions > 1 {
                        let greedy = f.greedy_action(s);
                        let other = (greedy + rng.random_range(1..actions)) % actions;
                        values[row + other] = (f.max_value(s) + bump).min(1.0);
                    } else {
                        let a = rng.random_range(0..actions);
                        values[row + a] = (values[row + a] - bump).max(0.0);
                    }
                    QTable::from_flat(states, actions, values)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    make_online_scenario(&OnlineSpec {
        mdp,
        quantization,
        distractors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageFamilySpec {
    /// Number of arms at the start state; equals the coverability.
    pub arms: usize,
    /// Probability that the good arm reaches the rewarding state.
    pub reach: f64,
    pub quantization: f64,
}

impl Default for CoverageFamilySpec {
    fn default() -> Self {
        Self {
            arms: 4,
            reach: 0.8,
            quantization: 0.1,
        }
    }
}

/// Two-step bandit-like instance.
///
/// Arm 0 at the start state leads to a rewarding state (with two nearly
/// tied actions) with probability `reach` and to a flat slip state
/// otherwise; every other arm leads to a flat side state. Quantization
/// makes the reference chain prefer the slightly worse of the tied actions.
/// One optimistic distractor overstates arm 1; for each other arm `k` a
/// dominated distractor puts value only on arm `k`, so every arm is some
/// member's greedy action and the coverability is the number of arms.
pub fn make_coverage_family(spec: &CoverageFamilySpec) -> Result<OnlineScenario> {
    let CoverageFamilySpec {
        arms,
        reach,
        quantization,
    } = *spec;
    precondition(arms >= 2, || "coverage family needs two arms".into())?;
    precondition(reach > 0.0 && reach < 1.0, || format!("reach = {reach} not in (0, 1)"))?;
    const START: usize = 0;
    const MAIN: usize = 1;
    const SLIP: usize = 2;
    const SIDE: usize = 3;
    let states = 4;
    let stay = |s: usize| -> Vec<f64> { (0..states).map(|t| if t == s { 1.0 } else { 0.0 }).collect() };

    let mut p0 = vec![vec![Vec::new(); arms]; states];
    for (s, row) in p0.iter_mut().enumerate() {
        for (a, next) in row.iter_mut().enumerate() {
            *next = match (s, a) {
                (START, 0) => {
                    let mut v = vec![0.0; states];
                    v[MAIN] = reach;
                    v[SLIP] = 1.0 - reach;
                    v
                }
                (START, _) => stay(SIDE),
                _ => stay(s),
            };
        }
    }
    let p1 = (0..states).map(|s| vec![stay(s); arms]).collect();
    let r0 = vec![vec![0.0; arms]; states];
    let mut r1 = vec![vec![0.0; arms]; states];
    r1[MAIN][0] = 0.76;
    r1[MAIN][1] = 0.78;
    r1[SLIP] = vec![0.25; arms];
    r1[SIDE] = vec![0.25; arms];
    let mdp = EpisodicMDP::new(vec![p0, p1], vec![r0, r1], START)?;

    let chain = reference_chain(&mdp, quantization);
    let f0 = &chain[0];
    let mut first = Vec::with_capacity(arms);
    let mut optimistic = f0.values().to_vec();
    optimistic[START * arms + 1] = 1.0;
    first.push(QTable::from_flat(states, arms, optimistic)?);
    for k in 1..arms {
        let mut dominated = f0.values().to_vec();
        for a in 0..arms {
            dominated[START * arms + a] = if a == k { 0.5 } else { 0.0 };
        }
        first.push(QTable::from_flat(states, arms, dominated)?);
    }
    make_online_scenario(&OnlineSpec {
        mdp,
        quantization,
        distractors: vec![first, Vec::new()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_family_has_designed_coverability() {
        for arms in [2, 4, 8, 16, 32] {
            let s = make_coverage_family(&CoverageFamilySpec {
                arms,
                ..Default::default()
            })
            .unwrap();
            let d = s.diagnostics();
            assert_eq!(d.c_cov, arms as f64);
            assert!((d.eps_inf - 0.05).abs() < 1e-9, "{}", d.eps_inf);
            assert_eq!(d.product_size, arms + 1);
        }
    }

    #[test]
    fn random_instance_is_complete_without_quantization() {
        let s = make_random_episodic_scenario(&RandomEpisodicSpec::default()).unwrap();
        assert!(s.diagnostics().eps_inf < 1e-12);
        assert!(s.diagnostics().product_size <= 105);
    }

    #[test]
    fn online_scenario_json_round_trip() {
        let s = make_coverage_family(&CoverageFamilySpec::default()).unwrap();
        let back = OnlineScenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn quantize_clamps_and_rounds() {
        assert_eq!(quantize(1.3, 0.0), 1.0);
        assert_eq!(quantize(-0.2, 0.1), 0.0);
        assert!((quantize(0.68, 0.1) - 0.7).abs() < 1e-12);
    }
}
