//! Discrete regression ground truth.
//!
//! The covariate space [0, 1] is cut into `m` equal cells and every object
//! here (densities, predictors, the regression function) is a table indexed
//! by cell.

use std::ops::Range;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, DbrError, Result};
use crate::rng;

/// Slack allowed on the total mass of a probability vector.
pub const PROB_TOL: f64 = 1e-12;

/// Two objective values closer than this count as a tie.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct CovariateGrid {
    m: usize,
}

#[derive(Deserialize)]
struct GridRepr {
    m: usize,
}

impl TryFrom<GridRepr> for CovariateGrid {
    type Error = DbrError;
    fn try_from(r: GridRepr) -> Result<Self> {
        Self::new(r.m)
    }
}

impl CovariateGrid {
    pub fn new(m: usize) -> Result<Self> {
        precondition(m >= 1, || "grid needs at least one cell".into())?;
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Half-open interval `[i/m, (i+1)/m)` covered by cell `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let m = self.m as f64;
        (i as f64 / m, (i + 1) as f64 / m)
    }

    /// Cell containing `x`; the right endpoint 1 belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        Some(((x * self.m as f64).floor() as usize).min(self.m - 1))
    }
}

/// Probability mass per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr")]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct DistributionRepr {
    weights: Vec<f64>,
}

impl TryFrom<DistributionRepr> for DiscreteDistribution {
    type Error = DbrError;
    fn try_from(r: DistributionRepr) -> Result<Self> {
        Self::new(r.weights)
    }
}

impl DiscreteDistribution {
    /// Validates and, when the total is off by more than summation round-off
    /// but less than [`PROB_TOL`], rescales to unit mass.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            weights: normalize(weights)?,
        })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            weights: vec![1.0 / m as f64; m],
        }
    }

    /// Uniform over `cells`, zero elsewhere.
    pub fn uniform_on(m: usize, cells: Range<usize>) -> Result<Self> {
        precondition(cells.start < cells.end && cells.end <= m, || {
            format!("cell range {cells:?} is empty or exceeds m = {m}")
        })?;
        let w = 1.0 / cells.len() as f64;
        let mut weights = vec![0.0; m];
        weights[cells].fill(w);
        Ok(Self { weights })
    }

    pub fn point_mass(m: usize, i: usize) -> Self {
        let mut weights = vec![0.0; m];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    /// Alias-free sampler over cell indices.
    pub fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.weights).expect("validated distribution has positive mass")
    }
}

/// Shared normalization rule for every probability vector in the crate.
pub fn normalize(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    precondition(!weights.is_empty(), || "empty probability vector".into())?;
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(DbrError::PreconditionViolation(format!(
            "probability weight {w} is negative or not finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    let roundoff = weights.len() as f64 * f64::EPSILON;
    if (total - 1.0).abs() > PROB_TOL {
        return Err(DbrError::PreconditionViolation(format!(
            "weights sum to {total}, not 1"
        )));
    }
    if (total - 1.0).abs() > roundoff {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(weights)
}

/// A predictor on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr")]
pub struct FunctionTable {
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct TableRepr {
    values: Vec<f64>,
}

impl TryFrom<TableRepr> for FunctionTable {
    type Error = DbrError;
    fn try_from(r: TableRepr) -> Result<Self> {
        Self::new(r.values)
    }
}

impl FunctionTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        precondition(!values.is_empty(), || "function table is empty".into())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(DbrError::PreconditionViolation(format!(
                "table value {v} violates the sup-norm bound of 1"
            )));
        }
        Ok(Self { values })
    }

    pub fn constant(m: usize, v: f64) -> Result<Self> {
        Self::new(vec![v; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_distance(&self, other: &FunctionTable) -> f64 {
        assert_eq!(self.len(), other.len(), "tables live on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl std::ops::Index<usize> for FunctionTable {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Ordered finite class; the order fixes tie-breaking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassRepr")]
pub struct FunctionClass {
    members: Vec<FunctionTable>,
}

#[derive(Deserialize)]
struct ClassRepr {
    members: Vec<FunctionTable>,
}

impl TryFrom<ClassRepr> for FunctionClass {
    type Error = DbrError;
    fn try_from(r: ClassRepr) -> Result<Self> {
        Self::new(r.members)
    }
}

impl FunctionClass {
    pub fn new(members: Vec<FunctionTable>) -> Result<Self> {
        precondition(!members.is_empty(), || "function class is empty".into())?;
        let m = members[0].len();
        precondition(members.iter().all(|f| f.len() == m), || {
            "class members live on different grids".into()
        })?;
        Ok(Self { members })
    }

    pub fn members(&self) -> &[FunctionTable] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &FunctionTable {
        &self.members[i]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of grid cells.
    pub fn m(&self) -> usize {
        self.members[0].len()
    }
}

/// Label noise around the regression function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `y = f*(x) ± b` with equal probability.
    TwoPoint { b: f64 },
    /// `y ~ Ber(f*(x))`.
    Bernoulli,
}

impl NoiseModel {
    pub fn validate(&self, f_star: &FunctionTable) -> Result<()> {
        let sup = f_star.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        match *self {
            NoiseModel::TwoPoint { b } => precondition(b >= 0.0 && b + sup <= 1.0, || {
                format!("two-point noise b = {b} with sup|f*| = {sup} lets |y| exceed 1")
            }),
            NoiseModel::Bernoulli => {
                precondition(f_star.values().iter().all(|v| (0.0..=1.0).contains(v)), || {
                    "Bernoulli labels need f* in [0, 1]".into()
                })
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::TwoPoint { b } => {
                if rng.random_bool(0.5) {
                    mean + b
                } else {
                    mean - b
                }
            }
            NoiseModel::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Conditional variance of `y` given `f*(x) = mean`.
    pub fn variance(&self, mean: f64) -> f64 {
        match *self {
            NoiseModel::TwoPoint { b } => b * b,
            NoiseModel::Bernoulli => mean * (1.0 - mean),
        }
    }
}

/// A regression instance under covariate shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr")]
pub struct Scenario {
    grid: CovariateGrid,
    d_train: DiscreteDistribution,
    d_test: DiscreteDistribution,
    f_star: FunctionTable,
    class: FunctionClass,
    noise: NoiseModel,
    eps_inf: f64,
    c_inf: f64,
}

#[derive(Deserialize)]
struct ScenarioRepr {
    grid: CovariateGrid,
    d_train: DiscreteDistribution,
    d_test: DiscreteDistribution,
    f_star: FunctionTable,
    class: FunctionClass,
    noise: NoiseModel,
    eps_inf: f64,
    c_inf: f64,
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = DbrError;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        let s = Scenario::new(r.grid, r.d_train, r.d_test, r.f_star, r.class, r.noise)
            .map_err(|e| DbrError::ScenarioError(e.to_string()))?;
        if s.eps_inf.to_bits() != r.eps_inf.to_bits() {
            return Err(DbrError::ScenarioError(format!(
                "cached eps_inf {} disagrees with the class ({})",
                r.eps_inf, s.eps_inf
            )));
        }
        if s.c_inf.to_bits() != r.c_inf.to_bits() {
            return Err(DbrError::ScenarioError(format!(
                "cached c_inf {} disagrees with the distributions ({})",
                r.c_inf, s.c_inf
            )));
        }
        Ok(s)
    }
}

impl Scenario {
    pub fn new(
        grid: CovariateGrid,
        d_train: DiscreteDistribution,
        d_test: DiscreteDistribution,
        f_star: FunctionTable,
        class: FunctionClass,
        noise: NoiseModel,
    ) -> Result<Self> {
        let m = grid.m();
        precondition(
            d_train.len() == m && d_test.len() == m && f_star.len() == m && class.m() == m,
            || format!("every table must have m = {m} cells"),
        )?;
        noise.validate(&f_star)?;
        let c_inf = density_ratio_coefficient(&d_test, &d_train)?;
        let eps_inf = misspecification_level(&class, &f_star);
        Ok(Self {
            grid,
            d_train,
            d_test,
            f_star,
            class,
            noise,
            eps_inf,
            c_inf,
        })
    }

    pub fn grid(&self) -> CovariateGrid {
        self.grid
    }
    pub fn d_train(&self) -> &DiscreteDistribution {
        &self.d_train
    }
    pub fn d_test(&self) -> &DiscreteDistribution {
        &self.d_test
    }
    pub fn f_star(&self) -> &FunctionTable {
        &self.f_star
    }
    pub fn class(&self) -> &FunctionClass {
        &self.class
    }
    pub fn noise(&self) -> NoiseModel {
        self.noise
    }
    pub fn eps_inf(&self) -> f64 {
        self.eps_inf
    }
    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    pub fn r_train(&self, f: &FunctionTable) -> f64 {
        risk(f, &self.f_star, &self.d_train)
    }

    pub fn r_test(&self, f: &FunctionTable) -> f64 {
        risk(f, &self.f_star, &self.d_test)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DbrError::ScenarioError(e.to_string()))
    }
}

/// `n` labeled cells drawn from the training marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    pairs: Vec<(usize, f64)>,
    seed: u64,
}

impl RegressionDataset {
    pub fn new(pairs: Vec<(usize, f64)>, m: usize, seed: u64) -> Result<Self> {
        precondition(
            pairs.iter().all(|&(i, y)| i < m && y.is_finite() && y.abs() <= 1.0),
            || format!("dataset has a cell outside [0, {m}) or a label with |y| > 1"),
        )?;
        Ok(Self { pairs, seed })
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `max_i d_test[i] / d_train[i]` over the support of `d_test`.
pub fn density_ratio_coefficient(
    d_test: &DiscreteDistribution,
    d_train: &DiscreteDistribution,
) -> Result<f64> {
    precondition(d_test.len() == d_train.len(), || {
        "distributions live on different grids".into()
    })?;
    let mut c = 0.0f64;
    for (i, (&q, &p)) in d_test.weights().iter().zip(d_train.weights()).enumerate() {
        if q == 0.0 {
            continue;
        }
        if p == 0.0 {
            return Err(DbrError::SupportViolation { index: i, mass: q });
        }
        c = c.max(q / p);
    }
    Ok(c)
}

/// `min_f ‖f − f*‖∞` over the class.
pub fn misspecification_level(class: &FunctionClass, f_star: &FunctionTable) -> f64 {
    class
        .members()
        .iter()
        .map(|f| f.sup_distance(f_star))
        .fold(f64::INFINITY, f64::min)
}

/// Squared prediction error `Σ d[i]·(f[i] − f*[i])²`.
pub fn risk(f: &FunctionTable, f_star: &FunctionTable, d: &DiscreteDistribution) -> f64 {
    assert_eq!(f.len(), d.len(), "table and distribution grids differ");
    assert_eq!(f_star.len(), d.len(), "table and distribution grids differ");
    f.values()
        .iter()
        .zip(f_star.values())
        .zip(d.weights())
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum()
}

/// The two-member lower-bound construction.
///
/// `d_train` is uniform, `d_test` is uniform on the first `m/C` cells,
/// `f* ≡ 1/2`, and the class is `[f̄ ≡ 1/2 + ε, f_bad]` where `f_bad` adds
/// `ζ` on the test block only. At `ζ = √C·ε` both members have the same
/// training risk.
pub fn make_scenario_amplification(eps_inf: f64, c_inf: f64, zeta: f64, m: usize) -> Result<Scenario> {
    precondition(eps_inf > 0.0 && eps_inf < 1.0, || format!("eps_inf = {eps_inf} not in (0, 1)"))?;
    precondition(c_inf >= 1.0, || format!("c_inf = {c_inf} below 1"))?;
    let edge = c_inf.sqrt() * eps_inf;
    precondition(edge <= 0.5 + TIE_TOL, || {
        format!("sqrt(c_inf)·eps_inf = {edge} exceeds 1/2")
    })?;
    precondition(zeta > 0.0 && zeta <= edge + TIE_TOL, || {
        format!("zeta = {zeta} outside (0, sqrt(c_inf)·eps_inf = {edge}]")
    })?;
    let c_round = c_inf.round();
    precondition((c_inf - c_round).abs() <= 1e-9, || {
        format!("c_inf = {c_inf} must be an integer for the block to align with cells")
    })?;
    let c_cells = c_round as usize;
    precondition(m % c_cells == 0, || format!("m = {m} not divisible by {c_cells}"))?;
    let block = m / c_cells;

    let grid = CovariateGrid::new(m)?;
    let d_train = DiscreteDistribution::uniform(m);
    let d_test = DiscreteDistribution::uniform_on(m, 0..block)?;
    let f_star = FunctionTable::constant(m, 0.5)?;
    let f_bar = FunctionTable::constant(m, 0.5 + eps_inf)?;
    let f_bad = FunctionTable::new((0..m).map(|i| if i < block { 0.5 + zeta } else { 0.5 }).collect())?;
    let class = FunctionClass::new(vec![f_bar, f_bad])?;
    Scenario::new(grid, d_train, d_test, f_star, class, NoiseModel::Bernoulli)
}

/// Singleton covariate, `y ~ Ber(1/4)`, class `[f* ≡ 1/4, f ≡ 1/2]`.
pub fn make_scenario_linf_inconsistency() -> Scenario {
    let build = || -> Result<Scenario> {
        let class = FunctionClass::new(vec![
            FunctionTable::constant(1, 0.25)?,
            FunctionTable::constant(1, 0.5)?,
        ])?;
        Scenario::new(
            CovariateGrid::new(1)?,
            DiscreteDistribution::point_mass(1, 0),
            DiscreteDistribution::point_mass(1, 0),
            FunctionTable::constant(1, 0.25)?,
            class,
            NoiseModel::Bernoulli,
        )
    };
    build().expect("fixed construction is valid")
}

/// i.i.d. sample of `n` pairs; a pure function of `(scenario, n, seed)`.
pub fn sample_dataset(scenario: &Scenario, n: usize, seed: u64) -> Result<RegressionDataset> {
    precondition(n >= 1, || "dataset size must be positive".into())?;
    let mut rng = rng::stream(seed);
    let cells = scenario.d_train.sampler();
    let noise = scenario.noise;
    let f_star = scenario.f_star.values();
    let pairs = (0..n)
        .map(|_| {
            let i = cells.sample(&mut rng);
            (i, noise.draw(f_star[i], &mut rng))
        })
        .collect();
    Ok(RegressionDataset { pairs, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_identical_distributions_is_one() {
        let d = DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(density_ratio_coefficient(&d, &d).unwrap(), 1.0);
    }

    #[test]
    fn ratio_on_amplification_block() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        // uniform on 1/16 of the cells against uniform on all of them
        assert!((s.c_inf() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_rejects_missing_support() {
        let test = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
        let train = DiscreteDistribution::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            density_ratio_coefficient(&test, &train),
            Err(DbrError::SupportViolation { index: 1, .. })
        ));
    }

    #[test]
    fn misspecification_examples() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        assert!((s.eps_inf() - 0.1).abs() < 1e-15);

        let f_star = FunctionTable::constant(4, 0.0).unwrap();
        let class = FunctionClass::new(vec![FunctionTable::constant(4, 1.0).unwrap()]).unwrap();
        assert_eq!(misspecification_level(&class, &f_star), 1.0);

        let class = FunctionClass::new(vec![f_star.clone()]).unwrap();
        assert_eq!(misspecification_level(&class, &f_star), 0.0);
    }

    #[test]
    fn risk_examples() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        assert_eq!(s.r_test(s.f_star()), 0.0);
        assert!((s.r_test(s.class().member(0)) - 0.01).abs() < 1e-12);
        assert!((s.r_test(s.class().member(1)) - 0.1521).abs() < 1e-12);
    }

    #[test]
    fn amplification_train_risks() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        let bad = s.r_train(s.class().member(1));
        assert!((bad - 0.39f64.powi(2) / 16.0).abs() < 1e-12);
        assert!(bad < 0.01);
        assert!((s.r_train(s.class().member(0)) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn amplification_without_shift() {
        let s = make_scenario_amplification(0.1, 1.0, 0.05, 100).unwrap();
        assert_eq!(s.d_test(), s.d_train());
        assert!(s.class().member(1).values().iter().all(|&v| v == 0.55));
    }

    #[test]
    fn amplification_rejects_large_shift() {
        assert!(matches!(
            make_scenario_amplification(0.2, 16.0, 0.5, 1600),
            Err(DbrError::PreconditionViolation(_))
        ));
        assert!(make_scenario_amplification(0.1, 16.0, 0.39, 1000).is_err());
    }

    #[test]
    fn linf_construction() {
        let s = make_scenario_linf_inconsistency();
        assert_eq!(s.eps_inf(), 0.0);
        assert_eq!(s.c_inf(), 1.0);
        assert_eq!(s.grid().m(), 1);
    }

    #[test]
    fn sampling_contract() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        assert!(matches!(sample_dataset(&s, 0, 1), Err(DbrError::PreconditionViolation(_))));
        let a = sample_dataset(&s, 500, 7).unwrap();
        let b = sample_dataset(&s, 500, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.pairs().iter().all(|&(_, y)| y == 0.0 || y == 1.0));

        let grid = CovariateGrid::new(3).unwrap();
        let f_star = FunctionTable::new(vec![0.1, -0.2, 0.3]).unwrap();
        let class = FunctionClass::new(vec![f_star.clone()]).unwrap();
        let two = Scenario::new(
            grid,
            DiscreteDistribution::uniform(3),
            DiscreteDistribution::uniform(3),
            f_star.clone(),
            class,
            NoiseModel::TwoPoint { b: 0.5 },
        )
        .unwrap();
        let data = sample_dataset(&two, 1000, 3).unwrap();
        for &(i, y) in data.pairs() {
            assert!(y == f_star[i] + 0.5 || y == f_star[i] - 0.5);
        }
    }

    #[test]
    fn two_point_noise_bound_enforced() {
        let f_star = FunctionTable::constant(2, 0.6).unwrap();
        assert!(NoiseModel::TwoPoint { b: 0.5 }.validate(&f_star).is_err());
        assert!(NoiseModel::TwoPoint { b: 0.4 }.validate(&f_star).is_ok());
        let neg = FunctionTable::constant(2, -0.1).unwrap();
        assert!(NoiseModel::Bernoulli.validate(&neg).is_err());
    }

    #[test]
    fn normalization_rule() {
        let d = DiscreteDistribution::new(vec![0.5, 0.5 + 5e-13]).unwrap();
        let total: f64 = d.weights().iter().sum();
        assert!((total - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn cell_geometry() {
        let g = CovariateGrid::new(4).unwrap();
        assert_eq!(g.cell_bounds(1), (0.25, 0.5));
        assert_eq!(g.cell_of(0.25), Some(1));
        assert_eq!(g.cell_of(1.0), Some(3));
        assert_eq!(g.cell_of(1.5), None);
        assert!(CovariateGrid::new(0).is_err());
    }

    #[test]
    fn scenario_json_round_trip_is_bit_exact() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        for (a, b) in s.d_test().weights().iter().zip(back.d_test().weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn scenario_json_rejects_stale_cache() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v["eps_inf"] = serde_json::json!(0.2);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(DbrError::ScenarioError(_))
        ));
    }
}
