//! Fixed and randomized regression instances used by the experiment suites.

use rand::Rng;

use crate::domain::{
    CovariateGrid, DiscreteDistribution, FunctionClass, FunctionTable, NoiseModel, Scenario,
};
use crate::error::Result;
use crate::rng;

/// Eight-member misspecified instance on 20 cells with `ε∞ = 0.1`.
///
/// `f*` rises linearly from 0.3 to 0.7 and member 0 alternates `±0.1`
/// around it; the others are biased on blocks of varying training mass.
pub fn benchmark_scenario() -> Scenario {
    let build = || -> Result<Scenario> {
        let m = 20;
        let f_star: Vec<f64> = (0..m).map(|i| 0.3 + 0.4 * i as f64 / 19.0).collect();
        let shifted = |shift: &dyn Fn(usize) -> f64| -> Result<FunctionTable> {
            FunctionTable::new(f_star.iter().enumerate().map(|(i, v)| v + shift(i)).collect())
        };
        let members = vec![
            shifted(&|i| if i % 2 == 0 { 0.1 } else { -0.1 })?,
            shifted(&|i| if i < 5 { 0.45 } else { 0.0 })?,
            shifted(&|i| if i >= 10 { -0.3 } else { 0.0 })?,
            shifted(&|_| 0.2)?,
            shifted(&|i| if i >= 15 { -0.6 } else { 0.0 })?,
            shifted(&|i| if i % 2 == 0 { 0.05 } else { 0.25 })?,
            FunctionTable::constant(m, 0.5)?,
            shifted(&|i| if i < 2 { 0.6 } else { -0.15 })?,
        ];
        Scenario::new(
            CovariateGrid::new(m)?,
            DiscreteDistribution::uniform(m),
            DiscreteDistribution::uniform_on(m, 0..4)?,
            FunctionTable::new(f_star)?,
            FunctionClass::new(members)?,
            NoiseModel::Bernoulli,
        )
    };
    build().expect("fixed construction is valid")
}

/// Well-specified instance: `f*` within `±1/2` and the class of its
/// constant shifts by multiples of 0.01 up to `±1/2` (101 members, `f*`
/// itself at index 50), with symmetric two-point noise.
pub fn realizable_scenario() -> Scenario {
    let build = || -> Result<Scenario> {
        let m = 20;
        let f_star: Vec<f64> = (0..m).map(|i| -0.4 + 0.8 * i as f64 / 19.0).collect();
        let members = (-50..=50)
            .map(|k| {
                let c = k as f64 / 100.0;
                FunctionTable::new(f_star.iter().map(|v| (v + c).clamp(-1.0, 1.0)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(
            CovariateGrid::new(m)?,
            DiscreteDistribution::uniform(m),
            DiscreteDistribution::uniform_on(m, 0..5)?,
            FunctionTable::new(f_star)?,
            FunctionClass::new(members)?,
            NoiseModel::TwoPoint { b: 0.5 },
        )
    };
    build().expect("fixed construction is valid")
}

/// Random misspecified instance under covariate shift.
///
/// `d_train` has full support, `d_test` concentrates on a random block, a
/// reference member sits within `ε ∈ (0, 0.2)` of `f*`, and the remaining
/// members mix arbitrary tables with ones biased only on the test block.
pub fn random_shift_scenario(seed: u64) -> Scenario {
    let mut rng = rng::stream(seed);
    let m: usize = rng.random_range(4..=40);
    let eps = rng.random_range(0.01..0.2);
    let f_star: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..0.8)).collect();

    let mut train: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let block_len = rng.random_range(1..=m.div_ceil(2));
    let start = rng.random_range(0..=m - block_len);
    let block = start..start + block_len;
    for w in &mut train[block.clone()] {
        *w *= rng.random_range(0.01..0.2);
    }
    let test: Vec<f64> = (0..m)
        .map(|i| if block.contains(&i) { rng.random_range(0.5..1.0) } else { rng.random_range(0.0..0.02) })
        .collect();

    let mut members = Vec::new();
    let reference: Vec<f64> = f_star
        .iter()
        .map(|v| v + if rng.random_bool(0.5) { eps } else { -eps })
        .collect();
    members.push(reference);
    for _ in 0..rng.random_range(1..=7) {
        let biased = rng.random_bool(0.5);
        let scale = rng.random_range(0.0..0.7);
        let member = f_star
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let shift = if !biased || block.contains(&i) {
                    rng.random_range(-scale..=scale)
                } else {
                    rng.random_range(-eps..=eps)
                };
                (v + shift).clamp(-1.0, 1.0)
            })
            .collect();
        members.push(member);
    }
    // The reference need not come first.
    let k = members.len();
    members.swap(0, rng.random_range(0..k));

    let build = || -> Result<Scenario> {
        Scenario::new(
            CovariateGrid::new(m)?,
            DiscreteDistribution::new(normalize_weights(train))?,
            DiscreteDistribution::new(normalize_weights(test))?,
            FunctionTable::new(f_star)?,
            FunctionClass::new(members.into_iter().map(FunctionTable::new).collect::<Result<_>>()?)?,
            NoiseModel::Bernoulli,
        )
    };
    build().expect("random construction is valid")
}

fn normalize_weights(w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `(f*, f̄, f, τ)` on a random grid with `‖f̄ − f*‖∞ ≤ ε ≤ τ/2`.
#[derive(Clone, Debug)]
pub struct NonnegativityInstance {
    pub f_star: FunctionTable,
    pub f_bar: FunctionTable,
    pub f: FunctionTable,
    pub eps: f64,
    pub tau: f64,
}

pub fn random_nonnegativity_instance(seed: u64) -> NonnegativityInstance {
    let mut rng = rng::stream(seed);
    let m: usize = rng.random_range(1..=50);
    let eps = rng.random_range(0.0..0.3);
    let tau = 2.0 * eps + rng.random_range(0.0..0.3);
    let f_star: Vec<f64> = (0..m).map(|_| rng.random_range(-0.6..0.6)).collect();
    let f_bar: Vec<f64> = f_star.iter().map(|v| v + rng.random_range(-eps..=eps)).collect();
    let f: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let table = |v: Vec<f64>| FunctionTable::new(v).expect("values lie in [-1, 1]");
    NonnegativityInstance {
        f_star: table(f_star),
        f_bar: table(f_bar),
        f: table(f),
        eps,
        tau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_instances_have_expected_levels() {
        let b = benchmark_scenario();
        assert!((b.eps_inf() - 0.1).abs() < 1e-12);
        assert_eq!(b.class().len(), 8);
        let r = realizable_scenario();
        assert_eq!(r.eps_inf(), 0.0);
        assert_eq!(r.class().len(), 101);
    }

    #[test]
    fn random_shift_scenarios_build() {
        for seed in 0..50 {
            let s = random_shift_scenario(seed);
            assert!(s.eps_inf() < 0.2 + 1e-12);
            assert!(s.c_inf() >= 1.0);
        }
    }
}
