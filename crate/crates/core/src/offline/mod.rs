//! Tabular discounted MDPs, exact policy evaluation, coverage diagnostics
//! and the (filtered) minimax Bellman-error estimator for offline RL.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{normalize, TIE_TOL};
use crate::error::{precondition, DbrError, Result};
use crate::regression::{argmin_lowest, FitResult};
use crate::rng;

mod scenario;
pub use scenario::{
    make_amplification_mdp, make_random_offline_scenario, AmplificationMdpSpec, OfflineDiagnostics, OfflineScenario,
};

/// Value iteration stops once the sup-norm change drops to this.
pub const VI_TOL: f64 = 1e-12;
pub const VI_MAX_ITERS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpRepr")]
pub struct DiscountedMDP {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "A")]
    actions: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    d0: Vec<f64>,
    gamma: f64,
}

#[derive(Deserialize)]
struct MdpRepr {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "A")]
    actions: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    d0: Vec<f64>,
    gamma: f64,
}

impl TryFrom<MdpRepr> for DiscountedMDP {
    type Error = DbrError;
    fn try_from(r: MdpRepr) -> Result<Self> {
        let mdp = DiscountedMDP::new(r.p, r.r, r.d0, r.gamma)?;
        precondition(mdp.states == r.states && mdp.actions == r.actions, || {
            "declared S/A disagree with the tables".into()
        })?;
        Ok(mdp)
    }
}

impl DiscountedMDP {
    /// `p[s][a]` is the next-state distribution, `r[s][a] ∈ [0, 1]`.
    pub fn new(p: Vec<Vec<Vec<f64>>>, r: Vec<Vec<f64>>, d0: Vec<f64>, gamma: f64) -> Result<Self> {
        let states = p.len();
        precondition(states >= 1, || "MDP needs at least one state".into())?;
        let actions = p[0].len();
        precondition(actions >= 1, || "MDP needs at least one action".into())?;
        precondition((0.0..1.0).contains(&gamma), || format!("gamma = {gamma} not in [0, 1)"))?;
        precondition(r.len() == states && d0.len() == states, || "R/d0 shape mismatch".into())?;
        let mut p_checked = Vec::with_capacity(states);
        for (s, row) in p.into_iter().enumerate() {
            precondition(row.len() == actions && r[s].len() == actions, || {
                format!("state {s} has the wrong number of actions")
            })?;
            let mut out = Vec::with_capacity(actions);
            for next in row {
                precondition(next.len() == states, || format!("P[{s}] row has wrong length"))?;
                out.push(normalize(next)?);
            }
            p_checked.push(out);
        }
        precondition(
            r.iter().flatten().all(|v| (0.0..=1.0).contains(v)),
            || "rewards must lie in [0, 1]".into(),
        )?;
        Ok(Self {
            states,
            actions,
            p: p_checked,
            r,
            d0: normalize(d0)?,
            gamma,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }
    pub fn actions(&self) -> usize {
        self.actions
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn d0(&self) -> &[f64] {
        &self.d0
    }
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.r[s][a]
    }
    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.p[s][a]
    }
    /// Largest achievable value, `1/(1 − γ)`.
    pub fn v_max(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }
}

/// Action values, stored row-major as `values[s·A + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for QTable {
    type Error = DbrError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        QTable::new(rows)
    }
}

impl From<QTable> for Vec<Vec<f64>> {
    fn from(q: QTable) -> Self {
        q.values.chunks(q.actions).map(|c| c.to_vec()).collect()
    }
}

impl QTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        precondition(!rows.is_empty() && !rows[0].is_empty(), || "empty Q-table".into())?;
        let actions = rows[0].len();
        precondition(rows.iter().all(|r| r.len() == actions), || "ragged Q-table".into())?;
        let states = rows.len();
        Self::from_flat(states, actions, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(states: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        precondition(values.len() == states * actions && states * actions > 0, || {
            "Q-table size mismatch".into()
        })?;
        precondition(values.iter().all(|v| v.is_finite()), || "non-finite Q-value".into())?;
        Ok(Self {
            states,
            actions,
            values,
        })
    }

    pub fn zeros(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            values: vec![0.0; states * actions],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }
    pub fn actions(&self) -> usize {
        self.actions
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index action within the tie tolerance of the row maximum.
    pub fn greedy_action(&self, s: usize) -> usize {
        greedy(self.row(s))
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "Q-table shapes differ");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn same_shape(&self, other: &QTable) -> bool {
        self.states == other.states && self.actions == other.actions
    }
}

pub(crate) fn greedy(row: &[f64]) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    row.iter().position(|&v| v >= best - TIE_TOL).expect("non-empty row")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<QTable>", into = "Vec<QTable>")]
pub struct QClass {
    members: Vec<QTable>,
}

impl TryFrom<Vec<QTable>> for QClass {
    type Error = DbrError;
    fn try_from(members: Vec<QTable>) -> Result<Self> {
        QClass::new(members)
    }
}

impl From<QClass> for Vec<QTable> {
    fn from(c: QClass) -> Self {
        c.members
    }
}

impl QClass {
    pub fn new(members: Vec<QTable>) -> Result<Self> {
        precondition(!members.is_empty(), || "Q-class is empty".into())?;
        precondition(members.iter().all(|q| q.same_shape(&members[0])), || {
            "Q-class members differ in shape".into()
        })?;
        Ok(Self { members })
    }

    /// Checks the value range `[0, 1/(1 − γ)]` for use with `mdp`.
    pub fn check_for(&self, mdp: &DiscountedMDP) -> Result<()> {
        let q = &self.members[0];
        precondition(q.states == mdp.states && q.actions == mdp.actions, || {
            "Q-class shape does not match the MDP".into()
        })?;
        let hi = mdp.v_max() + TIE_TOL;
        precondition(
            self.members.iter().flat_map(|q| q.values.iter()).all(|&v| (-TIE_TOL..=hi).contains(&v)),
            || "Q-values must lie in [0, 1/(1 − gamma)]".into(),
        )
    }

    pub fn members(&self) -> &[QTable] {
        &self.members
    }
    pub fn member(&self, i: usize) -> &QTable {
        &self.members[i]
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicPolicy {
    action: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(action: Vec<usize>, actions: usize) -> Result<Self> {
        precondition(action.iter().all(|&a| a < actions), || "policy action out of range".into())?;
        Ok(Self { action })
    }

    pub fn greedy(f: &QTable) -> Self {
        Self {
            action: (0..f.states).map(|s| f.greedy_action(s)).collect(),
        }
    }

    pub fn action(&self, s: usize) -> usize {
        self.action[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action
    }
}

/// Probability vector over state–action pairs, row-major like [`QTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SaDistribution {
    states: usize,
    actions: usize,
    weights: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SaDistribution {
    type Error = DbrError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SaDistribution::new(rows)
    }
}

impl From<SaDistribution> for Vec<Vec<f64>> {
    fn from(d: SaDistribution) -> Self {
        d.weights.chunks(d.actions).map(|c| c.to_vec()).collect()
    }
}

impl SaDistribution {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        precondition(!rows.is_empty() && !rows[0].is_empty(), || "empty distribution".into())?;
        let actions = rows[0].len();
        precondition(rows.iter().all(|r| r.len() == actions), || "ragged distribution".into())?;
        let states = rows.len();
        Self::from_flat(states, actions, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(states: usize, actions: usize, weights: Vec<f64>) -> Result<Self> {
        precondition(weights.len() == states * actions, || "distribution size mismatch".into())?;
        Ok(Self {
            states,
            actions,
            weights: normalize(weights)?,
        })
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        let k = states * actions;
        Self {
            states,
            actions,
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }
    pub fn actions(&self) -> usize {
        self.actions
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.weights[s * self.actions + a]
    }
}

/// `[Tf](s, a) = R(s, a) + γ·Σ_{s'} P(s' | s, a)·max_{a'} f(s', a')`.
pub fn bellman_backup(f: &QTable, mdp: &DiscountedMDP) -> QTable {
    assert!(f.states == mdp.states && f.actions == mdp.actions, "Q-table shape mismatch");
    let v: Vec<f64> = (0..mdp.states).map(|s| f.max_value(s)).collect();
    let mut values = Vec::with_capacity(mdp.states * mdp.actions);
    for s in 0..mdp.states {
        for a in 0..mdp.actions {
            let next: f64 = mdp.p[s][a].iter().zip(&v).map(|(p, v)| p * v).sum();
            values.push(mdp.r[s][a] + mdp.gamma * next);
        }
    }
    QTable {
        states: mdp.states,
        actions: mdp.actions,
        values,
    }
}

/// `Q*` by value iteration from zero.
pub fn value_iteration(mdp: &DiscountedMDP) -> QTable {
    let mut q = QTable::zeros(mdp.states, mdp.actions);
    for _ in 0..VI_MAX_ITERS {
        let next = bellman_backup(&q, mdp);
        let change = next.sup_distance(&q);
        q = next;
        if change <= VI_TOL {
            break;
        }
    }
    q
}

pub fn optimal_policy(mdp: &DiscountedMDP) -> DeterministicPolicy {
    DeterministicPolicy::greedy(&value_iteration(mdp))
}

fn check_policy(pi: &DeterministicPolicy, mdp: &DiscountedMDP) -> Result<()> {
    precondition(
        pi.action.len() == mdp.states && pi.action.iter().all(|&a| a < mdp.actions),
        || "policy does not match the MDP".into(),
    )
}

fn policy_matrix(pi: &DeterministicPolicy, mdp: &DiscountedMDP) -> DMatrix<f64> {
    let n = mdp.states;
    DMatrix::from_fn(n, n, |s, t| mdp.p[s][pi.action[s]][t])
}

/// State values of `pi`: the solution of `(I − γP_π)V = R_π`.
pub fn policy_state_values(pi: &DeterministicPolicy, mdp: &DiscountedMDP) -> Result<Vec<f64>> {
    check_policy(pi, mdp)?;
    let n = mdp.states;
    let system = DMatrix::identity(n, n) - policy_matrix(pi, mdp) * mdp.gamma;
    let rhs = DVector::from_fn(n, |s, _| mdp.r[s][pi.action[s]]);
    let v = system.lu().solve(&rhs).ok_or(DbrError::SingularSystem)?;
    Ok(v.iter().copied().collect())
}

/// `J(π) = d0ᵀV^π`.
pub fn policy_value(pi: &DeterministicPolicy, mdp: &DiscountedMDP) -> Result<f64> {
    let v = policy_state_values(pi, mdp)?;
    Ok(v.iter().zip(&mdp.d0).map(|(v, d)| v * d).sum())
}

/// Normalized discounted occupancy `(1 − γ)·Σ_h γ^h d_h^π` over S×A.
pub fn occupancy(pi: &DeterministicPolicy, mdp: &DiscountedMDP) -> Result<SaDistribution> {
    check_policy(pi, mdp)?;
    let n = mdp.states;
    let system = DMatrix::identity(n, n) - policy_matrix(pi, mdp).transpose() * mdp.gamma;
    let rhs = DVector::from_fn(n, |s, _| (1.0 - mdp.gamma) * mdp.d0[s]);
    let nu = system.lu().solve(&rhs).ok_or(DbrError::SingularSystem)?;
    let mut weights = vec![0.0; n * mdp.actions];
    for s in 0..n {
        weights[s * mdp.actions + pi.action[s]] = nu[s].max(0.0);
    }
    Ok(SaDistribution {
        states: n,
        actions: mdp.actions,
        weights,
    })
}

/// Greedy policies of the class, deduplicated in order of first appearance.
pub fn induced_policies(class: &QClass) -> Vec<DeterministicPolicy> {
    let mut out: Vec<DeterministicPolicy> = Vec::new();
    for f in class.members() {
        let pi = DeterministicPolicy::greedy(f);
        if !out.contains(&pi) {
            out.push(pi);
        }
    }
    out
}

fn check_mu(mu: &SaDistribution, mdp: &DiscountedMDP) -> Result<()> {
    precondition(mu.states == mdp.states && mu.actions == mdp.actions, || {
        "data distribution shape does not match the MDP".into()
    })
}

/// `max_{π ∈ Π} ‖d^π / μ‖∞` with `Π` the greedy policies of the class.
pub fn concentrability(mu: &SaDistribution, class: &QClass, mdp: &DiscountedMDP) -> Result<f64> {
    check_mu(mu, mdp)?;
    let mut c = 0.0f64;
    for pi in induced_policies(class) {
        let d = occupancy(&pi, mdp)?;
        for (i, (&dp, &m)) in d.weights.iter().zip(&mu.weights).enumerate() {
            if dp <= 0.0 {
                continue;
            }
            if m == 0.0 {
                return Err(DbrError::SupportViolation { index: i, mass: dp });
            }
            c = c.max(dp / m);
        }
    }
    Ok(c)
}

/// Index of the member closest to `target` in sup-norm, lowest on ties.
pub fn closest_member(class: &QClass, target: &QTable) -> usize {
    let dist: Vec<f64> = class.members().iter().map(|g| g.sup_distance(target)).collect();
    argmin_lowest(&dist, TIE_TOL).index
}

/// Worst ratio of `‖f − apx[f]‖²` under `d^π` versus under `μ`, where
/// `apx[f]` is the member closest to `Tf`. Members with a zero denominator
/// are skipped; returns 1 when every member is skipped.
pub fn transfer_coefficient(mu: &SaDistribution, class: &QClass, mdp: &DiscountedMDP) -> Result<f64> {
    check_mu(mu, mdp)?;
    let occupancies = induced_policies(class)
        .iter()
        .map(|pi| occupancy(pi, mdp))
        .collect::<Result<Vec<_>>>()?;
    for d in &occupancies {
        if let Some(i) = (0..d.weights.len()).find(|&i| d.weights[i] > 0.0 && mu.weights[i] == 0.0) {
            return Err(DbrError::SupportViolation {
                index: i,
                mass: d.weights[i],
            });
        }
    }
    let mut worst: Option<f64> = None;
    for f in class.members() {
        let apx = class.member(closest_member(class, &bellman_backup(f, mdp)));
        let sq: Vec<f64> = f.values.iter().zip(&apx.values).map(|(a, b)| (a - b) * (a - b)).collect();
        let denom: f64 = sq.iter().zip(&mu.weights).map(|(e, m)| e * m).sum();
        if denom == 0.0 {
            continue;
        }
        for d in &occupancies {
            let numer: f64 = sq.iter().zip(&d.weights).map(|(e, w)| e * w).sum();
            let ratio = numer / denom;
            worst = Some(worst.map_or(ratio, |w| w.max(ratio)));
        }
    }
    Ok(worst.unwrap_or(1.0))
}

/// Smallest `ε` such that some member is `ε`-close to its own backup and
/// every backup `Tf` is `ε`-close to some member.
pub fn rl_misspec_level(class: &QClass, mdp: &DiscountedMDP) -> f64 {
    let backups: Vec<QTable> = class.members().iter().map(|f| bellman_backup(f, mdp)).collect();
    let realizable = class
        .members()
        .iter()
        .zip(&backups)
        .map(|(f, tf)| f.sup_distance(tf))
        .fold(f64::INFINITY, f64::min);
    let complete = backups
        .iter()
        .map(|tf| {
            class
                .members()
                .iter()
                .map(|g| g.sup_distance(tf))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    realizable.max(complete)
}

/// Transitions `(s, a, r, s')` with `(s, a) ~ μ`, `s' ~ P(s, a)`, `r = R(s, a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineDataset {
    tuples: Vec<(usize, usize, f64, usize)>,
    mu: SaDistribution,
    /// Discount of the generating MDP, needed to form regression targets.
    gamma: f64,
    seed: u64,
}

impl OfflineDataset {
    pub fn tuples(&self) -> &[(usize, usize, f64, usize)] {
        &self.tuples
    }
    pub fn mu(&self) -> &SaDistribution {
        &self.mu
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn len(&self) -> usize {
        self.tuples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Next-state samplers for every `(s, a)`, built once per MDP.
pub(crate) fn transition_samplers(rows: impl Iterator<Item = Vec<f64>>) -> Vec<WeightedIndex<f64>> {
    rows.map(|row| WeightedIndex::new(row).expect("validated transition row"))
        .collect()
}

pub fn sample_offline_dataset(
    mdp: &DiscountedMDP,
    mu: &SaDistribution,
    n: usize,
    seed: u64,
) -> Result<OfflineDataset> {
    precondition(n >= 1, || "dataset size must be positive".into())?;
    check_mu(mu, mdp)?;
    let mut rng = rng::stream(seed);
    let pairs = WeightedIndex::new(&mu.weights).expect("validated distribution");
    let next = transition_samplers(
        (0..mdp.states).flat_map(|s| (0..mdp.actions).map(move |a| (s, a))).map(|(s, a)| mdp.p[s][a].clone()),
    );
    let tuples = (0..n)
        .map(|_| {
            let k = pairs.sample(&mut rng);
            let (s, a) = (k / mdp.actions, k % mdp.actions);
            let s_next = next[k].sample(&mut rng);
            (s, a, mdp.r[s][a], s_next)
        })
        .collect();
    Ok(OfflineDataset {
        tuples,
        mu: mu.clone(),
        gamma: mdp.gamma,
        seed,
    })
}

/// Sufficient statistics for the minimax objective: per `(s, a)` count and
/// reward sum, and per `(s, a, s')` transition counts.
struct TransitionStats {
    n: usize,
    count: Vec<f64>,
    reward_sum: Vec<f64>,
    next: Vec<Vec<(usize, f64)>>,
    occupied: Vec<usize>,
}

impl TransitionStats {
    fn new(dataset: &OfflineDataset, states: usize, actions: usize) -> Self {
        let k = states * actions;
        let mut count = vec![0.0; k];
        let mut reward_sum = vec![0.0; k];
        let mut dense = vec![0.0; k * states];
        for &(s, a, r, t) in &dataset.tuples {
            let i = s * actions + a;
            count[i] += 1.0;
            reward_sum[i] += r;
            dense[i * states + t] += 1.0;
        }
        let next = (0..k)
            .map(|i| {
                (0..states)
                    .filter(|&t| dense[i * states + t] > 0.0)
                    .map(|t| (t, dense[i * states + t]))
                    .collect()
            })
            .collect();
        let occupied = (0..k).filter(|&i| count[i] > 0.0).collect();
        Self {
            n: dataset.len(),
            count,
            reward_sum,
            next,
            occupied,
        }
    }

    /// `Σ_i y_{f,i}` per `(s, a)` with `y = r + γ·max_{a'} f(s', a')`.
    fn target_sums(&self, f: &QTable, gamma: f64) -> Vec<f64> {
        let v: Vec<f64> = (0..f.states).map(|s| f.max_value(s)).collect();
        (0..self.count.len())
            .map(|i| {
                let cont: f64 = self.next[i].iter().map(|&(t, c)| c * v[t]).sum();
                self.reward_sum[i] + gamma * cont
            })
            .collect()
    }
}

/// Minimax Bellman-error fit over the class.
///
/// Targets are rebuilt from the outer candidate `f` for both terms of the
/// inner regret. With `filtered = false` the disagreement filter is
/// dropped, which is the standard (amplifying) minimax estimator.
pub fn dbr_minimax_fit(dataset: &OfflineDataset, class: &QClass, tau: f64, filtered: bool) -> Result<FitResult> {
    precondition(!dataset.is_empty(), || "dataset is empty".into())?;
    precondition(tau >= 0.0, || format!("tau = {tau} must be non-negative"))?;
    let q0 = class.member(0);
    let stats = TransitionStats::new(dataset, q0.states, q0.actions);
    let gamma = dataset.gamma;
    let members = class.members();
    let k = class.len();

    let mut objectives = vec![f64::INFINITY; k];
    let mut best = f64::INFINITY;
    for fi in 0..k {
        let f = &members[fi].values;
        let y_sum = stats.target_sums(&members[fi], gamma);
        let mut inner = 0.0f64;
        for (gi, g) in members.iter().enumerate() {
            if gi == fi {
                continue;
            }
            let g = &g.values;
            let mut acc = 0.0;
            for &i in &stats.occupied {
                let (a, b) = (f[i], g[i]);
                if !filtered || (a - b).abs() >= tau {
                    acc += stats.count[i] * (a * a - b * b) - 2.0 * (a - b) * y_sum[i];
                }
            }
            inner = inner.max(acc / stats.n as f64);
            if inner > best + TIE_TOL {
                break;
            }
        }
        objectives[fi] = inner;
        best = best.min(inner);
    }
    Ok(argmin_lowest(&objectives, TIE_TOL))
}

/// `J(π*) − J(π_f)`.
pub fn suboptimality(f_hat: &QTable, mdp: &DiscountedMDP) -> Result<f64> {
    let star = optimal_policy(mdp);
    Ok(policy_value(&star, mdp)? - policy_value(&DeterministicPolicy::greedy(f_hat), mdp)?)
}

/// Uniform random draw helper shared by the scenario generators.
pub(crate) fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
