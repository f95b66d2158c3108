//! Estimators over a finite function class: ERM, disagreement-based
//! regression (empirical, population and adaptive-τ), the two-member star
//! blend and L∞ regression, plus the risk functionals used to audit them.

use serde::{Deserialize, Serialize};

use crate::domain::{
    risk, DiscreteDistribution, FunctionClass, FunctionTable, RegressionDataset, TIE_TOL,
};
use crate::error::{precondition, DbrError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub index: usize,
    pub objective_value: f64,
    /// Members whose objective is within the tie tolerance of the minimum.
    pub tie_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbrConfig {
    pub tau: f64,
    pub tie_tolerance: f64,
}

impl DbrConfig {
    pub fn new(tau: f64) -> Result<Self> {
        precondition(tau >= 0.0 && tau.is_finite(), || format!("tau = {tau} must be non-negative"))?;
        Ok(Self {
            tau,
            tie_tolerance: TIE_TOL,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub index: usize,
    pub tau_hat: f64,
    /// Dyadic thresholds in ascending order.
    pub grid: Vec<f64>,
    pub tau_min: f64,
    pub eps_stat: f64,
    /// Set when no member passed the statistical threshold at any τ; the
    /// returned index is then the plain min–max fit at τ = 1.
    pub empty_version_space: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarFit {
    pub alpha: f64,
    pub blend: FunctionTable,
    pub objective: f64,
}

/// Lowest index among the minimizers, with ties taken within `tol`.
pub fn argmin_lowest(objectives: &[f64], tol: f64) -> FitResult {
    let best = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let index = objectives
        .iter()
        .position(|&v| v <= best + tol)
        .expect("non-empty objective list");
    FitResult {
        index,
        objective_value: objectives[index],
        tie_count: objectives.iter().filter(|&&v| v <= best + tol).count(),
    }
}

#[inline]
fn filter(f: f64, g: f64, tau: f64) -> bool {
    (f - g).abs() >= tau
}

/// Per-cell sufficient statistics of a dataset.
///
/// For any two predictors the summed squared-loss difference over the
/// samples in cell `i` is `count·(f² − g²) − 2(f − g)·Σy`, so min–max
/// objectives only need one pass over the data.
#[derive(Clone, Debug)]
pub struct CellStats {
    pub n: usize,
    pub count: Vec<f64>,
    pub sum_y: Vec<f64>,
    pub sum_y2: Vec<f64>,
    pub min_y: Vec<f64>,
    pub max_y: Vec<f64>,
    occupied: Vec<usize>,
}

impl CellStats {
    pub fn from_dataset(dataset: &RegressionDataset, m: usize) -> Self {
        let mut count = vec![0.0; m];
        let mut sum_y = vec![0.0; m];
        let mut sum_y2 = vec![0.0; m];
        let mut min_y = vec![f64::INFINITY; m];
        let mut max_y = vec![f64::NEG_INFINITY; m];
        for &(i, y) in dataset.pairs() {
            assert!(i < m, "dataset cell {i} outside a grid of {m} cells");
            count[i] += 1.0;
            sum_y[i] += y;
            sum_y2[i] += y * y;
            min_y[i] = min_y[i].min(y);
            max_y[i] = max_y[i].max(y);
        }
        let occupied = (0..m).filter(|&i| count[i] > 0.0).collect();
        Self {
            n: dataset.len(),
            count,
            sum_y,
            sum_y2,
            min_y,
            max_y,
            occupied,
        }
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    /// `L̂(f; g)` evaluated from the statistics.
    pub fn pairwise_loss(&self, f: &[f64], g: &[f64], tau: f64) -> f64 {
        let mut acc = 0.0;
        for &i in &self.occupied {
            let (a, b) = (f[i], g[i]);
            if filter(a, b, tau) {
                acc += self.count[i] * (a * a - b * b) - 2.0 * (a - b) * self.sum_y[i];
            }
        }
        acc / self.n as f64
    }

    /// Mean squared error of `f`.
    pub fn square_loss(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &i in &self.occupied {
            let a = f[i];
            acc += self.count[i] * a * a - 2.0 * a * self.sum_y[i] + self.sum_y2[i];
        }
        acc / self.n as f64
    }
}

fn check_fit_inputs(dataset: &RegressionDataset, class: &FunctionClass) -> Result<()> {
    precondition(!dataset.is_empty(), || "dataset is empty".into())?;
    let m = class.m();
    precondition(dataset.pairs().iter().all(|&(i, _)| i < m), || {
        format!("dataset cells exceed the class grid of {m} cells")
    })
}

/// `argmin_f max_g loss(f, g)` with `g = f` always feasible.
///
/// Members whose running inner max already exceeds the best completed
/// objective are abandoned early; they cannot be minimizers or ties.
fn minmax_select(k: usize, tol: f64, loss: impl Fn(usize, usize) -> f64) -> FitResult {
    let mut objectives = vec![f64::INFINITY; k];
    let mut best = f64::INFINITY;
    for f in 0..k {
        let mut inner = 0.0f64;
        for g in 0..k {
            if g == f {
                continue;
            }
            inner = inner.max(loss(f, g));
            if inner > best + tol {
                break;
            }
        }
        objectives[f] = inner;
        best = best.min(inner);
    }
    argmin_lowest(&objectives, tol)
}

/// Exact inner maxima `max_g loss(f, g)` for every member.
fn minmax_objectives(k: usize, loss: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    (0..k)
        .map(|f| {
            (0..k)
                .filter(|&g| g != f)
                .map(|g| loss(f, g))
                .fold(0.0f64, f64::max)
        })
        .collect()
}

pub fn erm_fit(dataset: &RegressionDataset, class: &FunctionClass) -> Result<FitResult> {
    check_fit_inputs(dataset, class)?;
    let stats = CellStats::from_dataset(dataset, class.m());
    let objectives: Vec<f64> = class
        .members()
        .iter()
        .map(|f| stats.square_loss(f.values()))
        .collect();
    Ok(argmin_lowest(&objectives, TIE_TOL))
}

/// L2(d_train) projection of `f*` onto the class.
pub fn erm_population(
    f_star: &FunctionTable,
    d_train: &DiscreteDistribution,
    class: &FunctionClass,
) -> FitResult {
    let objectives: Vec<f64> = class
        .members()
        .iter()
        .map(|f| risk(f, f_star, d_train))
        .collect();
    argmin_lowest(&objectives, TIE_TOL)
}

/// `L̂(f; g) = (1/n) Σ W(x_i)·{(f(x_i) − y_i)² − (g(x_i) − y_i)²}`, summed
/// sample by sample.
pub fn empirical_pairwise_loss(
    f: &FunctionTable,
    g: &FunctionTable,
    tau: f64,
    dataset: &RegressionDataset,
) -> f64 {
    assert_eq!(f.len(), g.len(), "tables live on different grids");
    let mut acc = 0.0;
    for &(i, y) in dataset.pairs() {
        let (a, b) = (f[i], g[i]);
        if filter(a, b, tau) {
            acc += (a - y) * (a - y) - (b - y) * (b - y);
        }
    }
    acc / dataset.len() as f64
}

/// Per-cell integrand `W·{(f − f*)² − (g − f*)²}` of the population loss.
pub fn pairwise_terms(f: &FunctionTable, g: &FunctionTable, tau: f64, f_star: &FunctionTable) -> Vec<f64> {
    assert_eq!(f.len(), g.len(), "tables live on different grids");
    assert_eq!(f.len(), f_star.len(), "tables live on different grids");
    f.values()
        .iter()
        .zip(g.values())
        .zip(f_star.values())
        .map(|((&a, &b), &t)| {
            if filter(a, b, tau) {
                (a - t) * (a - t) - (b - t) * (b - t)
            } else {
                0.0
            }
        })
        .collect()
}

/// Population pairwise loss via the noise-free integrand.
pub fn population_pairwise_loss(
    f: &FunctionTable,
    g: &FunctionTable,
    tau: f64,
    f_star: &FunctionTable,
    d_train: &DiscreteDistribution,
) -> f64 {
    pairwise_terms(f, g, tau, f_star)
        .iter()
        .zip(d_train.weights())
        .map(|(t, w)| w * t)
        .sum()
}

pub fn dbr_fit(dataset: &RegressionDataset, class: &FunctionClass, config: &DbrConfig) -> Result<FitResult> {
    check_fit_inputs(dataset, class)?;
    let stats = CellStats::from_dataset(dataset, class.m());
    let members = class.members();
    Ok(minmax_select(class.len(), config.tie_tolerance, |f, g| {
        stats.pairwise_loss(members[f].values(), members[g].values(), config.tau)
    }))
}

/// Min–max objective of every member at threshold `tau`.
pub fn dbr_objectives(stats: &CellStats, class: &FunctionClass, tau: f64) -> Vec<f64> {
    let members = class.members();
    minmax_objectives(class.len(), |f, g| {
        stats.pairwise_loss(members[f].values(), members[g].values(), tau)
    })
}

pub fn dbr_population(
    f_star: &FunctionTable,
    d_train: &DiscreteDistribution,
    class: &FunctionClass,
    config: &DbrConfig,
) -> FitResult {
    let members = class.members();
    minmax_select(class.len(), config.tie_tolerance, |f, g| {
        population_pairwise_loss(&members[f], &members[g], config.tau, f_star, d_train)
    })
}

/// Powers of two in `[tau_min, 1]`, ascending; `{1}` when `tau_min > 1`.
pub fn dyadic_grid(tau_min: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=64)
        .map(|i| 2f64.powi(-i))
        .take_while(|&t| t >= tau_min)
        .collect();
    if grid.is_empty() {
        grid.push(1.0);
    }
    grid.reverse();
    grid
}

/// Threshold grid and statistical slack for the adaptive estimator.
///
/// `τ_min` depends on `|S|`, which depends on `τ_min`; two passes of the
/// fixed point starting from `|S| = 1` are used.
pub fn adaptive_schedule(n: usize, class_size: usize, delta: f64) -> (f64, Vec<f64>, f64) {
    let n = n as f64;
    let k = class_size as f64;
    let mut size = 1.0;
    let mut tau_min = 0.0;
    let mut grid = Vec::new();
    for _ in 0..2 {
        tau_min = (160.0 * (k * size / delta).ln() / (3.0 * n)).sqrt();
        grid = dyadic_grid(tau_min);
        size = grid.len() as f64;
    }
    let eps_stat = 80.0 * (k * size / delta).ln() / (3.0 * n);
    (tau_min, grid, eps_stat)
}

pub fn dbr_adaptive_fit(dataset: &RegressionDataset, class: &FunctionClass, delta: f64) -> Result<AdaptiveResult> {
    check_fit_inputs(dataset, class)?;
    precondition(delta > 0.0 && delta < 1.0, || format!("delta = {delta} not in (0, 1)"))?;
    let (tau_min, grid, eps_stat) = adaptive_schedule(dataset.len(), class.len(), delta);
    let stats = CellStats::from_dataset(dataset, class.m());
    let k = class.len();

    // Walk τ downward, intersecting version spaces as we go.
    let mut alive = vec![true; k];
    let mut found: Option<(f64, Vec<bool>)> = None;
    for &tau in grid.iter().rev() {
        let objectives = dbr_objectives(&stats, class, tau);
        let next: Vec<bool> = (0..k)
            .map(|f| alive[f] && objectives[f] <= eps_stat / 2.0)
            .collect();
        if !next.iter().any(|&a| a) {
            break;
        }
        alive = next;
        found = Some((tau, alive.clone()));
    }

    let tau_max = *grid.last().expect("grid is never empty");
    Ok(match found {
        Some((tau_hat, members)) => AdaptiveResult {
            index: members.iter().position(|&a| a).expect("non-empty intersection"),
            tau_hat,
            grid,
            tau_min,
            eps_stat,
            empty_version_space: false,
        },
        None => {
            let objectives = dbr_objectives(&stats, class, tau_max);
            AdaptiveResult {
                index: argmin_lowest(&objectives, TIE_TOL).index,
                tau_hat: tau_max,
                grid,
                tau_min,
                eps_stat,
                empty_version_space: true,
            }
        }
    })
}

fn blend(a: &FunctionTable, b: &FunctionTable, alpha: f64) -> Vec<f64> {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (1.0 - alpha) * x + alpha * y)
        .collect()
}

/// Population star step over `f_α = (1 − α)·F[0] + α·F[1]`.
pub fn star_fit_population(
    class: &FunctionClass,
    f_star: &FunctionTable,
    d_train: &DiscreteDistribution,
    alpha_grid: usize,
) -> Result<StarFit> {
    if class.len() != 2 {
        return Err(DbrError::ClassSizeError {
            expected: 2,
            found: class.len(),
        });
    }
    precondition(alpha_grid >= 2, || "alpha grid needs at least two points".into())?;
    let (a, b) = (class.member(0), class.member(1));
    let objective = |alpha: f64| -> f64 {
        blend(a, b, alpha)
            .iter()
            .zip(f_star.values())
            .zip(d_train.weights())
            .map(|((v, t), w)| w * (v - t) * (v - t))
            .sum()
    };

    let step = 1.0 / (alpha_grid - 1) as f64;
    let alphas: Vec<f64> = (0..alpha_grid).map(|k| k as f64 * step).collect();
    let values: Vec<f64> = alphas.iter().map(|&al| objective(al)).collect();
    let k = argmin_lowest(&values, TIE_TOL).index;
    let (mut best_alpha, mut best_value) = (alphas[k], values[k]);

    // Golden-section refinement inside the neighbouring grid cells. The
    // search runs on the increment over the grid optimum,
    // obj(α_k + t) − obj(α_k) = t·Σ d·Δ·(2u + Δt), which keeps full relative
    // precision near the minimum where raw objective values cancel.
    let u: Vec<f64> = blend(a, b, best_alpha)
        .iter()
        .zip(f_star.values())
        .map(|(v, t)| v - t)
        .collect();
    let slope: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| y - x).collect();
    let increment = |t: f64| -> f64 {
        t * slope
            .iter()
            .zip(&u)
            .zip(d_train.weights())
            .map(|((dl, ui), w)| w * dl * (2.0 * ui + dl * t))
            .sum::<f64>()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best_alpha - step).max(0.0) - best_alpha, (best_alpha + step).min(1.0) - best_alpha);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut v1, mut v2) = (increment(x1), increment(x2));
    while hi - lo > 1e-10 {
        if v1 <= v2 {
            hi = x2;
            x2 = x1;
            v2 = v1;
            x1 = hi - inv_phi * (hi - lo);
            v1 = increment(x1);
        } else {
            lo = x1;
            x1 = x2;
            v1 = v2;
            x2 = lo + inv_phi * (hi - lo);
            v2 = increment(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    if increment(t) < -TIE_TOL {
        best_alpha += t;
        best_value = objective(best_alpha);
    }
    Ok(StarFit {
        alpha: best_alpha,
        blend: FunctionTable::new(blend(a, b, best_alpha))?,
        objective: best_value,
    })
}

/// Chebyshev fit: lowest-index minimizer of `max_i |f(x_i) − y_i|`.
pub fn linf_fit(dataset: &RegressionDataset, class: &FunctionClass) -> Result<FitResult> {
    check_fit_inputs(dataset, class)?;
    let stats = CellStats::from_dataset(dataset, class.m());
    let objectives: Vec<f64> = class
        .members()
        .iter()
        .map(|f| {
            stats.occupied().iter().fold(0.0f64, |acc, &i| {
                let v = f[i];
                acc.max((v - stats.max_y[i]).abs()).max((v - stats.min_y[i]).abs())
            })
        })
        .collect();
    Ok(argmin_lowest(&objectives, TIE_TOL))
}

/// `Σ d[i]·1{|f − f*| ≥ threshold}·{(f − f*)² − eps²}`.
pub fn filtered_excess_risk(
    f: &FunctionTable,
    f_star: &FunctionTable,
    d: &DiscreteDistribution,
    threshold: f64,
    eps: f64,
) -> f64 {
    f.values()
        .iter()
        .zip(f_star.values())
        .zip(d.weights())
        .filter(|((a, b), _)| (*a - *b).abs() >= threshold)
        .map(|((a, b), w)| w * ((a - b) * (a - b) - eps * eps))
        .sum()
}

/// Mass of the cells where `|f − f*| ≥ threshold`.
pub fn tail_probability(f: &FunctionTable, f_star: &FunctionTable, d: &DiscreteDistribution, threshold: f64) -> f64 {
    f.values()
        .iter()
        .zip(f_star.values())
        .zip(d.weights())
        .filter(|((a, b), _)| (*a - *b).abs() >= threshold)
        .map(|(_, w)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_scenario_amplification, make_scenario_linf_inconsistency, sample_dataset};

    fn table(v: &[f64]) -> FunctionTable {
        FunctionTable::new(v.to_vec()).unwrap()
    }

    fn class(tables: &[&[f64]]) -> FunctionClass {
        FunctionClass::new(tables.iter().map(|t| table(t)).collect()).unwrap()
    }

    #[test]
    fn erm_small_examples() {
        let data = RegressionDataset::new(vec![(0, 1.0)], 1, 0).unwrap();
        let c = class(&[&[0.0], &[1.0]]);
        let fit = erm_fit(&data, &c).unwrap();
        assert_eq!(fit.index, 1);
        assert_eq!(fit.objective_value, 0.0);

        let single = class(&[&[0.3]]);
        assert_eq!(erm_fit(&data, &single).unwrap().index, 0);
    }

    #[test]
    fn erm_population_prefers_bad_member() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        assert_eq!(erm_population(s.f_star(), s.d_train(), s.class()).index, 1);
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let fit = erm_population(s.f_star(), s.d_train(), s.class());
        assert_eq!(fit.index, 1);
        assert!((fit.objective_value - 0.0081).abs() < 1e-12);

        let c = FunctionClass::new(vec![table(&[0.9, 0.9]), table(&[0.5, 0.5])]).unwrap();
        let half = table(&[0.5, 0.5]);
        let d = DiscreteDistribution::uniform(2);
        let fit = erm_population(&half, &d, &c);
        assert_eq!(fit.index, 1);
        assert_eq!(fit.objective_value, 0.0);
    }

    #[test]
    fn empirical_loss_hand_example() {
        let data = RegressionDataset::new(vec![(0, 0.0)], 1, 0).unwrap();
        let f = table(&[0.5]);
        let g = table(&[0.0]);
        assert_eq!(empirical_pairwise_loss(&f, &g, 0.3, &data), 0.25);
        assert_eq!(empirical_pairwise_loss(&f, &f, 0.3, &data), 0.0);
    }

    #[test]
    fn population_loss_examples() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let (bar, bad) = (s.class().member(0), s.class().member(1));
        let l = population_pairwise_loss(bad, bar, 0.3, s.f_star(), s.d_train());
        assert!((l - 0.0077).abs() < 1e-12);

        let s = make_scenario_amplification(0.1, 25.0, 0.39, 1000).unwrap();
        let (bar, bad) = (s.class().member(0), s.class().member(1));
        assert_eq!(population_pairwise_loss(bad, bar, 0.3, s.f_star(), s.d_train()), 0.0);
        assert_eq!(population_pairwise_loss(bar, bar, 0.0, s.f_star(), s.d_train()), 0.0);
    }

    #[test]
    fn dbr_degenerate_cases() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let data = sample_dataset(&s, 200, 3).unwrap();
        let single = FunctionClass::new(vec![s.class().member(1).clone()]).unwrap();
        let fit = dbr_fit(&data, &single, &DbrConfig::new(0.3).unwrap()).unwrap();
        assert_eq!((fit.index, fit.objective_value), (0, 0.0));

        // sup distance between members is 0.35
        let fit = dbr_fit(&data, s.class(), &DbrConfig::new(0.71).unwrap()).unwrap();
        assert_eq!((fit.index, fit.objective_value, fit.tie_count), (0, 0.0, 2));
    }

    #[test]
    fn dbr_population_examples() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let cfg = DbrConfig::new(0.3).unwrap();
        let fit = dbr_population(s.f_star(), s.d_train(), s.class(), &cfg);
        assert_eq!(fit.index, 0);
        assert_eq!(fit.objective_value, 0.0);
        assert_eq!(fit.tie_count, 1);

        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        let fit = dbr_population(s.f_star(), s.d_train(), s.class(), &cfg);
        assert_eq!((fit.index, fit.tie_count), (0, 2));
        assert!(s.r_test(s.class().member(1)) <= 17.0 * 0.01);
    }

    #[test]
    fn dbr_population_realizable_at_zero_threshold() {
        let f_star = table(&[0.2, 0.4, 0.6]);
        let c = FunctionClass::new(vec![table(&[0.3, 0.4, 0.6]), f_star.clone(), table(&[0.0, 0.0, 0.0])]).unwrap();
        let d = DiscreteDistribution::uniform(3);
        let fit = dbr_population(&f_star, &d, &c, &DbrConfig::new(0.0).unwrap());
        assert_eq!(fit.index, 1);
    }

    #[test]
    fn stats_path_matches_direct_sum() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let data = sample_dataset(&s, 5000, 11).unwrap();
        let stats = CellStats::from_dataset(&data, 1000);
        let (a, b) = (s.class().member(0), s.class().member(1));
        for tau in [0.0, 0.1, 0.3, 0.4] {
            let direct = empirical_pairwise_loss(a, b, tau, &data);
            let fast = stats.pairwise_loss(a.values(), b.values(), tau);
            assert!((direct - fast).abs() < 1e-12, "tau {tau}: {direct} vs {fast}");
        }
    }

    #[test]
    fn dyadic_grid_anchoring() {
        assert_eq!(dyadic_grid(0.3), vec![0.5, 1.0]);
        assert_eq!(dyadic_grid(0.25), vec![0.25, 0.5, 1.0]);
        assert_eq!(dyadic_grid(3.0), vec![1.0]);
    }

    #[test]
    fn adaptive_singleton_class() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let data = sample_dataset(&s, 10_000, 5).unwrap();
        let single = FunctionClass::new(vec![s.class().member(0).clone()]).unwrap();
        let fit = dbr_adaptive_fit(&data, &single, 0.1).unwrap();
        assert_eq!(fit.index, 0);
        assert_eq!(fit.tau_hat, fit.grid[0]);
        assert!(fit.grid[0] >= fit.tau_min);
        assert!(!fit.empty_version_space);
    }

    #[test]
    fn adaptive_avoids_bad_member() {
        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let data = sample_dataset(&s, 100_000, 1).unwrap();
        let fit = dbr_adaptive_fit(&data, s.class(), 0.1).unwrap();
        assert_eq!(fit.index, 0);
        assert_eq!(fit.grid, vec![0.0625, 0.125, 0.25, 0.5, 1.0]);
        assert_eq!(fit.tau_hat, 0.125);
        assert!(fit.tau_hat <= 0.4);
    }

    #[test]
    fn star_half_blend() {
        let s = make_scenario_amplification(0.1, 16.0, 0.4, 1600).unwrap();
        for grid in [101, 100, 7] {
            let fit = star_fit_population(s.class(), s.f_star(), s.d_train(), grid).unwrap();
            assert!((fit.alpha - 0.5).abs() < 1e-6, "grid {grid}: alpha {}", fit.alpha);
            assert!((s.r_test(&fit.blend) - 0.0625).abs() < 1e-9);
        }
    }

    #[test]
    fn star_identical_members_and_size_guard() {
        let f = table(&[0.6, 0.6]);
        let c = FunctionClass::new(vec![f.clone(), f.clone()]).unwrap();
        let f_star = table(&[0.5, 0.5]);
        let d = DiscreteDistribution::uniform(2);
        let fit = star_fit_population(&c, &f_star, &d, 11).unwrap();
        assert_eq!(fit.alpha, 0.0);
        assert!((fit.objective - risk(&f, &f_star, &d)).abs() < 1e-15);

        let three = FunctionClass::new(vec![f.clone(), f.clone(), f]).unwrap();
        assert!(matches!(
            star_fit_population(&three, &f_star, &d, 11),
            Err(DbrError::ClassSizeError { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn linf_examples() {
        let data = RegressionDataset::new(vec![(0, 0.2)], 1, 0).unwrap();
        assert_eq!(linf_fit(&data, &class(&[&[0.0], &[0.3]])).unwrap().index, 1);

        let s = make_scenario_linf_inconsistency();
        let data = RegressionDataset::new(vec![(0, 0.0), (0, 1.0), (0, 0.0)], 1, 0).unwrap();
        assert_eq!(linf_fit(&data, s.class()).unwrap().index, 1);
        let quiet = RegressionDataset::new(vec![(0, 0.25); 4], 1, 0).unwrap();
        assert_eq!(linf_fit(&quiet, s.class()).unwrap().index, 0);
    }

    #[test]
    fn excess_and_tail_examples() {
        let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
        let bad = s.class().member(1);
        assert_eq!(filtered_excess_risk(bad, s.f_star(), s.d_train(), 0.4, 0.1), 0.0);
        assert_eq!(filtered_excess_risk(s.f_star(), s.f_star(), s.d_train(), 0.0, 0.0), 0.0);

        let s = make_scenario_amplification(0.1, 25.0, 0.45, 1000).unwrap();
        let bad = s.class().member(1);
        assert!((tail_probability(bad, s.f_star(), s.d_train(), 0.4) - 0.04).abs() < 1e-12);
        assert!((tail_probability(bad, s.f_star(), s.d_train(), 0.0) - 1.0).abs() < 1e-12);
        assert_eq!(tail_probability(s.f_star(), s.f_star(), s.d_train(), 0.1), 0.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let s = make_scenario_linf_inconsistency();
        let empty = RegressionDataset::new(vec![], 1, 0).unwrap();
        assert!(erm_fit(&empty, s.class()).is_err());
        assert!(dbr_fit(&empty, s.class(), &DbrConfig::new(0.1).unwrap()).is_err());
        assert!(DbrConfig::new(-0.1).is_err());
    }
}
