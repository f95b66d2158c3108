//! Finite-horizon episodic MDPs and optimistic version-space exploration
//! with filtered squared Bellman errors.
//!
//! Steps are indexed from 0 to `H − 1`. A product class holds one ordered
//! list of `S×A` tables per step and an implicit all-zero table after the
//! last step. Product members are addressed by a mixed-radix index with
//! step 0 as the most significant digit.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
#[cfg(test)]
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{normalize, TIE_TOL};
use crate::error::{precondition, DbrError, Result};
use crate::offline::{QTable, SaDistribution};
use crate::rng;

mod scenario;
pub use scenario::{
    make_coverage_family, make_online_scenario, make_random_episodic_scenario, quantize, CoverageFamilySpec,
    OnlineDiagnostics, OnlineScenario, OnlineSpec, RandomEpisodicSpec,
};

/// Enumeration guard on `Π_h |F_h|`.
pub const PRODUCT_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EpisodicRepr")]
pub struct EpisodicMDP {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "A")]
    actions: usize,
    #[serde(rename = "H")]
    horizon: usize,
    /// `p[h][s][a]` is the distribution of the state at step `h + 1`.
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<Vec<f64>>>,
    s1: usize,
}

#[derive(Deserialize)]
struct EpisodicRepr {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "A")]
    actions: usize,
    #[serde(rename = "H")]
    horizon: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<Vec<f64>>>,
    s1: usize,
}

impl TryFrom<EpisodicRepr> for EpisodicMDP {
    type Error = DbrError;
    fn try_from(r: EpisodicRepr) -> Result<Self> {
        let m = EpisodicMDP::new(r.p, r.r, r.s1)?;
        precondition(
            m.states == r.states && m.actions == r.actions && m.horizon == r.horizon,
            || "declared S/A/H disagree with the tables".into(),
        )?;
        Ok(m)
    }
}

impl EpisodicMDP {
    pub fn new(p: Vec<Vec<Vec<Vec<f64>>>>, r: Vec<Vec<Vec<f64>>>, s1: usize) -> Result<Self> {
        let horizon = p.len();
        precondition(horizon >= 1 && r.len() == horizon, || "P and R need one entry per step".into())?;
        let states = p[0].len();
        precondition(states >= 1 && s1 < states, || "start state out of range".into())?;
        let actions = p[0][0].len();
        precondition(actions >= 1, || "MDP needs an action".into())?;
        let mut p_checked = Vec::with_capacity(horizon);
        for (h, step) in p.into_iter().enumerate() {
            precondition(step.len() == states && r[h].len() == states, || {
                format!("step {h} has the wrong number of states")
            })?;
            let mut rows = Vec::with_capacity(states);
            for (s, row) in step.into_iter().enumerate() {
                precondition(row.len() == actions && r[h][s].len() == actions, || {
                    format!("state {s} at step {h} has the wrong number of actions")
                })?;
                let mut out = Vec::with_capacity(actions);
                for next in row {
                    precondition(next.len() == states, || "transition row has wrong length".into())?;
                    out.push(normalize(next)?);
                }
                rows.push(out);
            }
            p_checked.push(rows);
        }
        precondition(r.iter().flatten().flatten().all(|v| (0.0..=1.0).contains(v)), || {
            "rewards must lie in [0, 1]".into()
        })?;
        let worst: f64 = r
            .iter()
            .map(|step| step.iter().flatten().copied().fold(0.0, f64::max))
            .sum();
        precondition(worst <= 1.0 + TIE_TOL, || {
            format!("per-episode reward can reach {worst} > 1")
        })?;
        Ok(Self {
            states,
            actions,
            horizon,
            p: p_checked,
            r,
            s1,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }
    pub fn actions(&self) -> usize {
        self.actions
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn s1(&self) -> usize {
        self.s1
    }
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.r[h][s][a]
    }
    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[f64] {
        &self.p[h][s][a]
    }
}

/// `F_0 × … × F_{H−1}` with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<QTable>>", into = "Vec<Vec<QTable>>")]
pub struct ProductQClass {
    per_step: Vec<Vec<QTable>>,
}

impl TryFrom<Vec<Vec<QTable>>> for ProductQClass {
    type Error = DbrError;
    fn try_from(per_step: Vec<Vec<QTable>>) -> Result<Self> {
        ProductQClass::new(per_step)
    }
}

impl From<ProductQClass> for Vec<Vec<QTable>> {
    fn from(c: ProductQClass) -> Self {
        c.per_step
    }
}

impl ProductQClass {
    pub fn new(per_step: Vec<Vec<QTable>>) -> Result<Self> {
        precondition(!per_step.is_empty(), || "product class needs a step".into())?;
        precondition(per_step.iter().all(|f| !f.is_empty()), || "every step needs a member".into())?;
        let first = &per_step[0][0];
        precondition(per_step.iter().flatten().all(|q| q.same_shape(first)), || {
            "product members differ in shape".into()
        })?;
        precondition(
            per_step
                .iter()
                .flatten()
                .flat_map(|q| q.values().iter())
                .all(|v| (0.0..=1.0).contains(v)),
            || "step values must lie in [0, 1]".into(),
        )?;
        Ok(Self { per_step })
    }

    pub fn horizon(&self) -> usize {
        self.per_step.len()
    }

    pub fn step(&self, h: usize) -> &[QTable] {
        &self.per_step[h]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_step.iter().map(Vec::len).collect()
    }

    /// `Π_h |F_h|`, saturating.
    pub fn product_size(&self) -> usize {
        self.per_step.iter().fold(1usize, |acc, f| acc.saturating_mul(f.len()))
    }

    pub fn check_enumerable(&self) -> Result<()> {
        let size = self.product_size();
        if size > PRODUCT_LIMIT {
            return Err(DbrError::ClassTooLarge {
                size,
                limit: PRODUCT_LIMIT,
            });
        }
        Ok(())
    }

    pub fn check_for(&self, mdp: &EpisodicMDP) -> Result<()> {
        let q = &self.per_step[0][0];
        precondition(
            self.horizon() == mdp.horizon && q.states() == mdp.states && q.actions() == mdp.actions,
            || "product class shape does not match the MDP".into(),
        )
    }

    pub fn encode(&self, choice: &[usize]) -> usize {
        choice
            .iter()
            .zip(&self.per_step)
            .fold(0usize, |acc, (&c, f)| acc * f.len() + c)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.horizon()];
        for h in (0..self.horizon()).rev() {
            let k = self.per_step[h].len();
            out[h] = index % k;
            index /= k;
        }
        out
    }

    /// Greedy policy of the product member `choice`.
    pub fn greedy_policy(&self, choice: &[usize]) -> EpisodicPolicy {
        EpisodicPolicy {
            actions: choice
                .iter()
                .zip(&self.per_step)
                .map(|(&c, f)| (0..f[c].states()).map(|s| f[c].greedy_action(s)).collect())
                .collect(),
        }
    }
}

/// Per-step deterministic policy, `actions[h][s]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EpisodicPolicy {
    actions: Vec<Vec<usize>>,
}

impl EpisodicPolicy {
    pub fn new(actions: Vec<Vec<usize>>, mdp: &EpisodicMDP) -> Result<Self> {
        precondition(
            actions.len() == mdp.horizon
                && actions.iter().all(|row| row.len() == mdp.states && row.iter().all(|&a| a < mdp.actions)),
            || "policy does not match the MDP".into(),
        )?;
        Ok(Self { actions })
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h][s]
    }
}

/// `[T_h f'](s, a) = R_h(s, a) + E[max_{a'} f'(s_{h+1}, a')]`; at the last
/// step the continuation is zero and `f_next` is ignored.
pub fn episodic_backup(f_next: &QTable, mdp: &EpisodicMDP, h: usize) -> QTable {
    assert!(h < mdp.horizon, "step {h} beyond horizon {}", mdp.horizon);
    let last = h + 1 == mdp.horizon;
    let v: Vec<f64> = (0..mdp.states)
        .map(|s| if last { 0.0 } else { f_next.max_value(s) })
        .collect();
    let mut values = Vec::with_capacity(mdp.states * mdp.actions);
    for s in 0..mdp.states {
        for a in 0..mdp.actions {
            let cont: f64 = mdp.p[h][s][a].iter().zip(&v).map(|(p, v)| p * v).sum();
            values.push(mdp.r[h][s][a] + cont);
        }
    }
    QTable::from_flat(mdp.states, mdp.actions, values).expect("finite backup")
}

/// Optimal action values `Q*_h` by backward induction.
pub fn optimal_q(mdp: &EpisodicMDP) -> Vec<QTable> {
    let mut out = vec![QTable::zeros(mdp.states, mdp.actions); mdp.horizon];
    let mut next = QTable::zeros(mdp.states, mdp.actions);
    for h in (0..mdp.horizon).rev() {
        next = episodic_backup(&next, mdp, h);
        out[h] = next.clone();
    }
    out
}

pub fn optimal_value(mdp: &EpisodicMDP) -> f64 {
    optimal_q(mdp)[0].max_value(mdp.s1)
}

fn check_policy(pi: &EpisodicPolicy, mdp: &EpisodicMDP) -> Result<()> {
    EpisodicPolicy::new(pi.actions.clone(), mdp).map(|_| ())
}

/// State distributions `P^π[s_h = s]` for every step.
fn state_distributions(pi: &EpisodicPolicy, mdp: &EpisodicMDP) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(mdp.horizon);
    let mut d = vec![0.0; mdp.states];
    d[mdp.s1] = 1.0;
    for h in 0..mdp.horizon {
        let mut next = vec![0.0; mdp.states];
        for s in 0..mdp.states {
            if d[s] == 0.0 {
                continue;
            }
            let a = pi.actions[h][s];
            for (t, p) in mdp.p[h][s][a].iter().enumerate() {
                next[t] += d[s] * p;
            }
        }
        out.push(std::mem::replace(&mut d, next));
    }
    out
}

/// `d_h^π(s, a) = P^π[s_h = s, a_h = a]`.
pub fn episodic_occupancy(pi: &EpisodicPolicy, mdp: &EpisodicMDP, h: usize) -> Result<SaDistribution> {
    check_policy(pi, mdp)?;
    precondition(h < mdp.horizon, || format!("step {h} beyond horizon"))?;
    let d = &state_distributions(pi, mdp)[h];
    Ok(sa_from_states(d, &pi.actions[h], mdp.actions))
}

fn sa_from_states(d: &[f64], actions: &[usize], n_actions: usize) -> SaDistribution {
    let mut w = vec![0.0; d.len() * n_actions];
    for (s, &p) in d.iter().enumerate() {
        w[s * n_actions + actions[s]] = p;
    }
    SaDistribution::from_flat(d.len(), n_actions, w).expect("occupancy is a distribution")
}

/// `J(π) = E^π[Σ_h r_h]` by forward recursion.
pub fn episodic_policy_value(pi: &EpisodicPolicy, mdp: &EpisodicMDP) -> Result<f64> {
    check_policy(pi, mdp)?;
    Ok(value_unchecked(pi, mdp))
}

fn value_unchecked(pi: &EpisodicPolicy, mdp: &EpisodicMDP) -> f64 {
    state_distributions(pi, mdp)
        .iter()
        .enumerate()
        .map(|(h, d)| {
            d.iter()
                .enumerate()
                .map(|(s, p)| p * mdp.r[h][s][pi.actions[h][s]])
                .sum::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coverability {
    pub value: f64,
    /// `μ*_h ∝ m_h`, the measures attaining the infimum.
    pub mu_star: Vec<SaDistribution>,
    /// `‖m_h‖_1` per step.
    pub per_step: Vec<f64>,
}

/// Distinct greedy policies of each step's tables, in first-appearance order.
fn step_policies(class: &ProductQClass) -> Vec<Vec<Vec<usize>>> {
    class
        .per_step
        .iter()
        .map(|tables| {
            let mut out: Vec<Vec<usize>> = Vec::new();
            for q in tables {
                let row: Vec<usize> = (0..q.states()).map(|s| q.greedy_action(s)).collect();
                if !out.contains(&row) {
                    out.push(row);
                }
            }
            out
        })
        .collect()
}

/// Every occupancy `d_h^π` for `π` ranging over the greedy policies of the
/// class, grouped by step. Policies that agree up to step `h` share a prefix.
pub fn policy_occupancies(class: &ProductQClass, mdp: &EpisodicMDP) -> Result<Vec<Vec<SaDistribution>>> {
    class.check_for(mdp)?;
    let pols = step_policies(class);
    let distinct: usize = pols.iter().fold(1usize, |acc, p| acc.saturating_mul(p.len()));
    if distinct > PRODUCT_LIMIT {
        return Err(DbrError::ClassTooLarge {
            size: distinct,
            limit: PRODUCT_LIMIT,
        });
    }
    let mut out: Vec<Vec<SaDistribution>> = vec![Vec::new(); mdp.horizon];
    let mut start = vec![0.0; mdp.states];
    start[mdp.s1] = 1.0;
    let mut frontier = vec![start];
    for h in 0..mdp.horizon {
        let mut next_frontier = Vec::new();
        for d in &frontier {
            for actions in &pols[h] {
                out[h].push(sa_from_states(d, actions, mdp.actions));
                if h + 1 < mdp.horizon {
                    let mut next = vec![0.0; mdp.states];
                    for s in 0..mdp.states {
                        if d[s] > 0.0 {
                            for (t, p) in mdp.p[h][s][actions[s]].iter().enumerate() {
                                next[t] += d[s] * p;
                            }
                        }
                    }
                    next_frontier.push(next);
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(out)
}

/// Coverability of the greedy policies of `class`.
///
/// With `m_h(s, a) = max_π d_h^π(s, a)`, any `μ_h` has some `(s, a)` with
/// `μ_h(s, a) ≤ m_h(s, a)/‖m_h‖_1`, so the worst ratio is at least
/// `‖m_h‖_1`, and `μ_h ∝ m_h` attains it.
pub fn coverability(class: &ProductQClass, mdp: &EpisodicMDP) -> Result<Coverability> {
    let occ = policy_occupancies(class, mdp)?;
    let mut per_step = Vec::with_capacity(mdp.horizon);
    let mut mu_star = Vec::with_capacity(mdp.horizon);
    for dists in &occ {
        let mut m = vec![0.0f64; mdp.states * mdp.actions];
        for d in dists {
            for (mi, &w) in m.iter_mut().zip(d.weights()) {
                *mi = mi.max(w);
            }
        }
        let total: f64 = m.iter().sum();
        per_step.push(total);
        mu_star.push(SaDistribution::from_flat(
            mdp.states,
            mdp.actions,
            m.iter().map(|x| x / total).collect(),
        )?);
    }
    Ok(Coverability {
        value: per_step.iter().copied().fold(0.0, f64::max),
        mu_star,
        per_step,
    })
}

/// One observed step: `(s, a, r, s')`.
pub type Transition = (usize, usize, f64, usize);

/// Running filtered-regret sums behind the version-space test.
///
/// `sums[h][(i·|F_h| + g)·|F_{h+1}| + j]` accumulates
/// `W(x)·{(f_i(x) − y_j)² − (f_g(x) − y_j)²}` over step-`h` transitions,
/// with `y_j = r + max_{a'} f_j(s', a')` and `f_j` ranging over `F_{h+1}`
/// (a single zero table after the last step).
#[derive(Clone, Debug, PartialEq)]
pub struct VersionSpaceAccumulator {
    sums: Vec<Vec<f64>>,
    next_sizes: Vec<usize>,
    episodes: usize,
    tau: f64,
    filtered: bool,
}

impl VersionSpaceAccumulator {
    pub fn new(class: &ProductQClass, tau: f64, filtered: bool) -> Self {
        let h_max = class.horizon();
        let next_sizes: Vec<usize> = (0..h_max)
            .map(|h| if h + 1 < h_max { class.per_step[h + 1].len() } else { 1 })
            .collect();
        let sums = (0..h_max)
            .map(|h| vec![0.0; class.per_step[h].len().pow(2) * next_sizes[h]])
            .collect();
        Self {
            sums,
            next_sizes,
            episodes: 0,
            tau,
            filtered,
        }
    }

    /// Recomputes the sums from a full history of episodes.
    pub fn from_history(class: &ProductQClass, tau: f64, filtered: bool, history: &[Vec<Transition>]) -> Self {
        let mut acc = Self::new(class, tau, filtered);
        for episode in history {
            acc.update(class, episode);
        }
        acc
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn sums(&self, h: usize) -> &[f64] {
        &self.sums[h]
    }

    /// Adds one episode, `episode[h]` being the step-`h` transition.
    pub fn update(&mut self, class: &ProductQClass, episode: &[Transition]) {
        let h_max = class.horizon();
        assert_eq!(episode.len(), h_max, "episode length differs from the horizon");
        let mut y = Vec::new();
        for (h, &(s, a, r, s_next)) in episode.iter().enumerate() {
            let tables = &class.per_step[h];
            let k = tables.len();
            let nj = self.next_sizes[h];
            y.clear();
            if h + 1 < h_max {
                y.extend(class.per_step[h + 1].iter().map(|f| r + f.max_value(s_next)));
            } else {
                y.push(r);
            }
            let sums = &mut self.sums[h];
            for i in 0..k {
                let fi = tables[i].get(s, a);
                for g in 0..k {
                    if g == i {
                        continue;
                    }
                    let fg = tables[g].get(s, a);
                    if self.filtered && (fi - fg).abs() < self.tau {
                        continue;
                    }
                    let base = (i * k + g) * nj;
                    for (j, &yj) in y.iter().enumerate() {
                        sums[base + j] += (fi - yj) * (fi - yj) - (fg - yj) * (fg - yj);
                    }
                }
            }
        }
        self.episodes += 1;
    }

    /// `ok[h][i·|F_{h+1}| + j]`: whether `max_g sums ≤ β` for the pair
    /// `(f_i ∈ F_h, f_j ∈ F_{h+1})`.
    pub fn admissible(&self, class: &ProductQClass, beta: f64) -> Vec<Vec<bool>> {
        (0..class.horizon())
            .map(|h| {
                let k = class.per_step[h].len();
                let nj = self.next_sizes[h];
                let sums = &self.sums[h];
                let mut ok = vec![true; k * nj];
                for i in 0..k {
                    for g in 0..k {
                        let base = (i * k + g) * nj;
                        for j in 0..nj {
                            if sums[base + j] > beta {
                                ok[i * nj + j] = false;
                            }
                        }
                    }
                }
                ok
            })
            .collect()
    }
}

/// Members of the current version space, summarized.
#[derive(Clone, Debug, PartialEq)]
pub struct VersionSpace {
    /// Number of product members satisfying every step's constraint.
    pub size: u64,
    /// Optimistic choice, `None` when the space is empty.
    pub chosen: Option<Vec<usize>>,
}

/// Counts the version space and picks its optimistic member.
///
/// Membership of a product member only couples consecutive steps, so
/// counting and the lowest-index optimistic completion are dynamic programs
/// over the steps.
pub fn version_space(class: &ProductQClass, ok: &[Vec<bool>], s1: usize) -> VersionSpace {
    let h_max = class.horizon();
    // completions[h][i]: admissible continuations from f_i ∈ F_h to the end.
    let mut completions: Vec<Vec<u64>> = vec![Vec::new(); h_max];
    for h in (0..h_max).rev() {
        let k = class.per_step[h].len();
        completions[h] = (0..k)
            .map(|i| {
                if h + 1 == h_max {
                    u64::from(ok[h][i])
                } else {
                    let nj = class.per_step[h + 1].len();
                    (0..nj)
                        .filter(|&j| ok[h][i * nj + j])
                        .map(|j| completions[h + 1][j])
                        .sum()
                }
            })
            .collect();
    }
    let size = completions[0].iter().sum();

    let first = &class.per_step[0];
    let best = (0..first.len())
        .filter(|&i| completions[0][i] > 0)
        .map(|i| first[i].max_value(s1))
        .fold(f64::NEG_INFINITY, f64::max);
    let Some(i0) = (0..first.len()).find(|&i| completions[0][i] > 0 && first[i].max_value(s1) >= best - TIE_TOL)
    else {
        return VersionSpace { size, chosen: None };
    };
    let mut chosen = vec![i0];
    for h in 0..h_max - 1 {
        let nj = class.per_step[h + 1].len();
        let i = chosen[h];
        let j = (0..nj)
            .find(|&j| ok[h][i * nj + j] && completions[h + 1][j] > 0)
            .expect("a counted completion exists");
        chosen.push(j);
    }
    VersionSpace {
        size,
        chosen: Some(chosen),
    }
}

/// Whether a given product member passes every step's constraint.
pub fn is_member(class: &ProductQClass, ok: &[Vec<bool>], choice: &[usize]) -> bool {
    let h_max = class.horizon();
    (0..h_max).all(|h| {
        if h + 1 == h_max {
            ok[h][choice[h]]
        } else {
            ok[h][choice[h] * class.per_step[h + 1].len() + choice[h + 1]]
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GolfConfig {
    pub episodes: usize,
    pub tau: f64,
    pub beta: f64,
    pub filtered: bool,
    pub seed: u64,
}

/// `β = c·log(T·H·|F|/δ)`.
pub fn default_beta(c: f64, episodes: usize, horizon: usize, class_size: usize, delta: f64) -> f64 {
    c * (episodes as f64 * horizon as f64 * class_size as f64 / delta).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub chosen_index: usize,
    pub version_space_size: u64,
    pub per_episode_gap: f64,
    pub cumulative_regret: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub per_episode: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretCurve {
    pub fn push(&mut self, gap: f64) {
        let total = self.cumulative.last().copied().unwrap_or(0.0) + gap;
        self.per_episode.push(gap);
        self.cumulative.push(total);
    }

    /// Cumulative regret after `t` episodes (`t ≥ 1`).
    pub fn at(&self, t: usize) -> f64 {
        self.cumulative[t - 1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GolfRun {
    pub regret: RegretCurve,
    pub logs: Vec<EpisodeLog>,
    /// Whether the tracked member stayed in the version space before every
    /// episode.
    pub tracked_survived: Option<bool>,
    pub j_star: f64,
}

/// Optimistic exploration over the version space of low filtered
/// squared-Bellman-error members.
///
/// Before episode `t` the version space uses the first `t − 1` episodes.
/// The chosen member's greedy policy is rolled out with the seeded
/// generator; the regret of each episode is computed exactly.
pub fn golf_dbr_run(
    mdp: &EpisodicMDP,
    class: &ProductQClass,
    config: &GolfConfig,
    track: Option<&[usize]>,
) -> Result<GolfRun> {
    precondition(config.episodes >= 1, || "need at least one episode".into())?;
    precondition(config.beta >= 0.0, || format!("beta = {} is negative", config.beta))?;
    precondition(config.tau >= 0.0, || format!("tau = {} is negative", config.tau))?;
    class.check_for(mdp)?;
    class.check_enumerable()?;
    if let Some(t) = track {
        precondition(
            t.len() == class.horizon() && t.iter().zip(class.sizes()).all(|(&c, k)| c < k),
            || "tracked member out of range".into(),
        )?;
    }

    let j_star = optimal_value(mdp);
    let samplers: Vec<Vec<Vec<WeightedIndex<f64>>>> = mdp
        .p
        .iter()
        .map(|step| {
            step.iter()
                .map(|row| row.iter().map(|p| WeightedIndex::new(p).expect("validated row")).collect())
                .collect()
        })
        .collect();
    let mut rng = rng::stream(config.seed);
    let mut acc = VersionSpaceAccumulator::new(class, config.tau, config.filtered);
    let mut regret = RegretCurve::default();
    let mut logs = Vec::with_capacity(config.episodes);
    let mut survived = track.map(|_| true);
    let mut episode: Vec<Transition> = Vec::with_capacity(mdp.horizon);

    for t in 1..=config.episodes {
        let ok = acc.admissible(class, config.beta);
        if let (Some(alive), Some(member)) = (survived.as_mut(), track) {
            *alive &= is_member(class, &ok, member);
        }
        let space = version_space(class, &ok, mdp.s1);
        let chosen = space.chosen.ok_or(DbrError::EmptyVersionSpace { episode: t })?;
        let pi = class.greedy_policy(&chosen);
        let gap = j_star - value_unchecked(&pi, mdp);
        regret.push(gap);
        logs.push(EpisodeLog {
            episode: t,
            chosen_index: class.encode(&chosen),
            version_space_size: space.size,
            per_episode_gap: gap,
            cumulative_regret: *regret.cumulative.last().expect("just pushed"),
        });

        episode.clear();
        let mut s = mdp.s1;
        for h in 0..mdp.horizon {
            let a = pi.actions[h][s];
            let s_next = samplers[h][s][a].sample(&mut rng);
            episode.push((s, a, mdp.r[h][s][a], s_next));
            s = s_next;
        }
        acc.update(class, &episode);
    }
    Ok(GolfRun {
        regret,
        logs,
        tracked_survived: survived,
        j_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incremental_sums_equal_batch() {
        let s = make_random_episodic_scenario(&RandomEpisodicSpec::default()).unwrap();
        let (mdp, class) = (s.mdp(), s.class());
        let mut rng = rng::stream(3);
        let mut history = Vec::new();
        let mut acc = VersionSpaceAccumulator::new(class, 0.1, true);
        for _ in 0..50 {
            let ep: Vec<Transition> = (0..mdp.horizon())
                .map(|_| {
                    let s = rng.random_range(0..mdp.states());
                    let a = rng.random_range(0..mdp.actions());
                    (s, a, rng.random::<f64>() / 3.0, rng.random_range(0..mdp.states()))
                })
                .collect();
            acc.update(class, &ep);
            history.push(ep);
        }
        let batch = VersionSpaceAccumulator::from_history(class, 0.1, true, &history);
        assert_eq!(acc, batch);
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = make_random_episodic_scenario(&RandomEpisodicSpec::default()).unwrap();
        let class = s.class();
        for idx in 0..class.product_size() {
            assert_eq!(class.encode(&class.decode(idx)), idx);
        }
    }

    #[test]
    fn golf_on_coverage_family_keeps_reference() {
        let s = make_coverage_family(&CoverageFamilySpec::default()).unwrap();
        let beta = default_beta(4.0, 2000, 2, s.diagnostics().product_size, 0.1);
        let cfg = GolfConfig {
            episodes: 2000,
            tau: 0.15,
            beta,
            filtered: true,
            seed: 1,
        };
        let run = golf_dbr_run(s.mdp(), s.class(), &cfg, Some(&s.reference_member())).unwrap();
        assert_eq!(run.tracked_survived, Some(true));
        let last = run.logs.last().unwrap();
        assert_eq!(last.chosen_index, 0);
        assert!((last.per_episode_gap - 0.016).abs() < 1e-9);
    }

    #[test]
    fn backup_at_last_step_is_reward() {
        let s = make_random_episodic_scenario(&RandomEpisodicSpec::default()).unwrap();
        let mdp = s.mdp();
        let h = mdp.horizon() - 1;
        let ones = QTable::from_flat(mdp.states(), mdp.actions(), vec![1.0; mdp.states() * mdp.actions()]).unwrap();
        let b = episodic_backup(&ones, mdp, h);
        assert_eq!(b.get(2, 1), mdp.reward(h, 2, 1));
    }
}
