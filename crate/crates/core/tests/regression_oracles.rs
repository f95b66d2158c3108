use dbr_core::catalog::benchmark_scenario;
use dbr_core::domain::{
    make_scenario_amplification, make_scenario_linf_inconsistency, risk, sample_dataset, NoiseModel, Scenario,
};
use dbr_core::regression::{
    dbr_population, empirical_pairwise_loss, erm_population, filtered_excess_risk, linf_fit,
    population_pairwise_loss, star_fit_population, tail_probability, DbrConfig,
};
use dbr_core::{rng, DbrError};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn population_loss_matches_noisy_monte_carlo() {
    let s = benchmark_scenario();
    let ds = sample_dataset(&s, 1_000_000, 77).unwrap();
    for (fi, gi, tau) in [(1, 0, 0.3), (5, 3, 0.1), (7, 2, 0.0)] {
        let (f, g) = (s.class().member(fi), s.class().member(gi));
        let samples: Vec<f64> = ds
            .pairs()
            .iter()
            .map(|&(i, y)| {
                if (f[i] - g[i]).abs() >= tau {
                    (f[i] - y).powi(2) - (g[i] - y).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let (mc, se) = mean_and_se(&samples);
        let exact = population_pairwise_loss(f, g, tau, s.f_star(), s.d_train());
        assert!((mc - exact).abs() <= 5.0 * se, "({fi},{gi}): {mc} vs {exact} (se {se})");
        assert!((empirical_pairwise_loss(f, g, tau, &ds) - mc).abs() < 1e-9);
    }
}

#[test]
fn noise_models_preserve_conditional_mean() {
    let mut rng = rng::stream(5);
    for (noise, means) in [
        (NoiseModel::TwoPoint { b: 0.3 }, vec![-0.7, 0.0, 0.4]),
        (NoiseModel::Bernoulli, vec![0.0, 0.1, 0.5, 0.93]),
    ] {
        for mean in means {
            let draws: Vec<f64> = (0..100_000).map(|_| noise.draw(mean, &mut rng)).collect();
            assert!(draws.iter().all(|y| y.abs() <= 1.0));
            let (m, se) = mean_and_se(&draws);
            let se = se.max(1e-12);
            assert!((m - mean).abs() <= 5.0 * se, "{noise:?} at {mean}: {m} (se {se})");
        }
    }
}

/// `L(f; f̄) ≤ 2 L̂(f; f̄) + ε_stat` simultaneously over the class.
#[test]
fn concentration_event_frequency() {
    let s = benchmark_scenario();
    let tau = 3.0 * s.eps_inf();
    let delta = 0.1;
    let f_bar = s.class().member(0);
    let k = s.class().len() as f64;
    for n in [100usize, 1_000, 10_000] {
        let eps_stat = 80.0 * (k / delta).ln() / (3.0 * n as f64);
        let hits = (0..500u64)
            .filter(|&rep| {
                let ds = sample_dataset(&s, n, 1_000 * n as u64 + rep).unwrap();
                s.class().members().iter().all(|f| {
                    let pop = population_pairwise_loss(f, f_bar, tau, s.f_star(), s.d_train());
                    pop <= 2.0 * empirical_pairwise_loss(f, f_bar, tau, &ds) + eps_stat
                })
            })
            .count();
        assert!(hits as f64 >= 0.9 * 500.0, "n = {n}: {hits}/500");
    }
}

fn c25_family(zeta: f64) -> Scenario {
    make_scenario_amplification(0.1, 25.0, zeta, 1000).unwrap()
}

#[test]
fn erm_amplifies_misspecification() {
    let s = c25_family(0.45);
    let fit = erm_population(s.f_star(), s.d_train(), s.class());
    assert_eq!(fit.index, 1);
    assert!((s.r_test(s.class().member(1)) - 0.2025).abs() < 1e-12);
    assert!((s.r_train(s.class().member(1)) - 0.45f64.powi(2) / 25.0).abs() < 1e-12);
    assert!((s.r_train(s.class().member(0)) - 0.01).abs() < 1e-12);
    let mut last = 0.0;
    for zeta in [0.45, 0.49, 0.499, 0.4999] {
        let s = c25_family(zeta);
        let fit = erm_population(s.f_star(), s.d_train(), s.class());
        let r = s.r_test(s.class().member(fit.index));
        assert!((r - zeta * zeta).abs() < 1e-12);
        assert!(r > last);
        last = r;
    }
    assert!(0.25 - last < 1e-3);
}

#[test]
fn dbr_population_avoids_amplification() {
    let s = c25_family(0.45);
    let fit = dbr_population(s.f_star(), s.d_train(), s.class(), &DbrConfig::new(0.3).unwrap());
    assert_eq!(fit.index, 0);
    let r = s.r_test(s.class().member(0));
    assert!((r - 0.01).abs() < 1e-12);
    assert!(r <= 17.0 * 0.01);
}

#[test]
fn tail_and_filtered_risk_closed_forms() {
    let s = c25_family(0.45);
    let bad = s.class().member(1);
    assert!((tail_probability(bad, s.f_star(), s.d_train(), 0.4) - 0.04).abs() < 1e-12);
    assert_eq!(tail_probability(s.f_star(), s.f_star(), s.d_train(), 0.1), 0.0);
    assert!((tail_probability(bad, s.f_star(), s.d_train(), 0.0) - 1.0).abs() < 1e-12);
    let s = make_scenario_amplification(0.1, 16.0, 0.39, 1600).unwrap();
    assert_eq!(filtered_excess_risk(s.class().member(1), s.f_star(), s.d_train(), 0.4, 0.1), 0.0);
    assert_eq!(filtered_excess_risk(s.f_star(), s.f_star(), s.d_train(), 0.0, 0.0), 0.0);
}

#[test]
fn star_blend_recovers_half() {
    let s = make_scenario_amplification(0.1, 16.0, 0.4, 1600).unwrap();
    let fit = star_fit_population(s.class(), s.f_star(), s.d_train(), 101).unwrap();
    assert!((fit.alpha - 0.5).abs() <= 1e-6, "alpha = {}", fit.alpha);
    assert!((risk(&fit.blend, s.f_star(), s.d_test()) - 0.0625).abs() <= 1e-9);
}

#[test]
fn linf_regression_is_inconsistent() {
    let s = make_scenario_linf_inconsistency();
    let half = (0..500u64)
        .filter(|&seed| linf_fit(&sample_dataset(&s, 200, seed).unwrap(), s.class()).unwrap().index == 1)
        .count();
    assert!(half >= 495, "{half}/500");
}

#[test]
fn datasets_are_deterministic() {
    let s = benchmark_scenario();
    assert_eq!(sample_dataset(&s, 5000, 3).unwrap(), sample_dataset(&s, 5000, 3).unwrap());
    assert_ne!(sample_dataset(&s, 5000, 3).unwrap(), sample_dataset(&s, 5000, 4).unwrap());
}

#[test]
fn scenario_files_round_trip_and_reject_tampering() {
    let s = c25_family(0.45);
    let text = s.to_json();
    assert_eq!(Scenario::from_json(&text).unwrap(), s);
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["c_inf"] = serde_json::json!(24.0);
    assert!(matches!(
        Scenario::from_json(&doc.to_string()),
        Err(DbrError::ScenarioError(_))
    ));
}
