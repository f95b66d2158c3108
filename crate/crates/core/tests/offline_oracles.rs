#![allow(clippy::needless_range_loop)]

use dbr_core::offline::{
    bellman_backup, concentrability, make_amplification_mdp, make_random_offline_scenario, occupancy, policy_value,
    sample_offline_dataset, suboptimality, transfer_coefficient, value_iteration, AmplificationMdpSpec,
    DeterministicPolicy, DiscountedMDP, OfflineScenario, QTable, SaDistribution,
};
use dbr_core::rng;
use proptest::prelude::*;
use rand::Rng;

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn eval(mdp: &DiscountedMDP, pi: &[usize]) -> Vec<f64> {
    let n = mdp.states();
    let a = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| f64::from(u8::from(s == t)) - mdp.gamma() * mdp.transition(s, pi[s])[t])
                .collect()
        })
        .collect();
    solve(a, (0..n).map(|s| mdp.reward(s, pi[s])).collect())
}

fn q_of(mdp: &DiscountedMDP, v: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.states())
        .map(|s| {
            (0..mdp.actions())
                .map(|a| {
                    mdp.reward(s, a)
                        + mdp.gamma() * mdp.transition(s, a).iter().zip(v).map(|(p, v)| p * v).sum::<f64>()
                })
                .collect()
        })
        .collect()
}

fn policy_iteration(mdp: &DiscountedMDP) -> Vec<Vec<f64>> {
    let mut pi = vec![0; mdp.states()];
    loop {
        let q = q_of(mdp, &eval(mdp, &pi));
        let next: Vec<usize> = q
            .iter()
            .zip(&pi)
            .map(|(row, &cur)| {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if row[cur] >= best - 1e-13 {
                    cur
                } else {
                    row.iter().position(|&x| x == best).unwrap()
                }
            })
            .collect();
        if next == pi {
            return q;
        }
        pi = next;
    }
}

/// `(1 − γ)·Σ_t γ^t d0ᵀ P_π^t`, truncated once the tail is below 1e-15.
fn occupancy_series(mdp: &DiscountedMDP, pi: &[usize]) -> Vec<f64> {
    let n = mdp.states();
    let mut d = mdp.d0().to_vec();
    let mut acc = vec![0.0; n];
    let mut w = 1.0 - mdp.gamma();
    while w > 1e-17 {
        for s in 0..n {
            acc[s] += w * d[s];
        }
        let mut next = vec![0.0; n];
        for s in 0..n {
            for (t, p) in mdp.transition(s, pi[s]).iter().enumerate() {
                next[t] += d[s] * p;
            }
        }
        d = next;
        w *= mdp.gamma();
    }
    let mut out = vec![0.0; n * mdp.actions()];
    for s in 0..n {
        out[s * mdp.actions() + pi[s]] = acc[s];
    }
    out
}

fn greedy(f: &QTable) -> Vec<usize> {
    DeterministicPolicy::greedy(f).actions().to_vec()
}

fn random_cases() -> Vec<OfflineScenario> {
    (0..6)
        .map(|seed| make_random_offline_scenario(3 + seed as usize % 4, 2 + seed as usize % 2, 0.85, 5, seed).unwrap())
        .collect()
}

#[test]
fn value_iteration_matches_policy_iteration() {
    for s in random_cases() {
        let q = value_iteration(s.mdp());
        let oracle = policy_iteration(s.mdp());
        for (st, row) in oracle.iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                assert!((q.get(st, a) - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn policy_value_and_occupancy_match_series() {
    for s in random_cases() {
        let mdp = s.mdp();
        for f in s.class().members() {
            let pi = greedy(f);
            let occ = occupancy_series(mdp, &pi);
            let exact = occupancy(&DeterministicPolicy::greedy(f), mdp).unwrap();
            for (a, b) in exact.weights().iter().zip(&occ) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((exact.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            // J = ⟨d^π, R⟩ / (1 − γ).
            let j: f64 = occ
                .iter()
                .enumerate()
                .map(|(i, w)| w * mdp.reward(i / mdp.actions(), i % mdp.actions()))
                .sum::<f64>()
                / (1.0 - mdp.gamma());
            assert!((policy_value(&DeterministicPolicy::greedy(f), mdp).unwrap() - j).abs() < 1e-9);
        }
    }
}

/// Undiscounted return up to a geometric stopping time has mean `J(π)`.
fn rollouts(mdp: &DiscountedMDP, pi: &[usize], n: usize, seed: u64) -> (f64, f64) {
    let mut rng = rng::stream(seed);
    let pick = |row: &[f64], u: f64| -> usize {
        let mut acc = 0.0;
        for (i, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        row.len() - 1
    };
    let returns: Vec<f64> = (0..n)
        .map(|_| {
            let mut s = pick(mdp.d0(), rng.random());
            let mut g = 0.0;
            loop {
                g += mdp.reward(s, pi[s]);
                if rng.random::<f64>() >= mdp.gamma() {
                    return g;
                }
                s = pick(mdp.transition(s, pi[s]), rng.random());
            }
        })
        .collect();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[test]
fn suboptimality_matches_rollouts() {
    for s in random_cases().into_iter().take(3) {
        let mdp = s.mdp();
        let f = s.class().member(4);
        let star = greedy(&value_iteration(mdp));
        let (j_star, se_star) = rollouts(mdp, &star, 100_000, 1);
        let (j_f, se_f) = rollouts(mdp, &greedy(f), 100_000, 2);
        let exact = suboptimality(f, mdp).unwrap();
        let se = (se_star * se_star + se_f * se_f).sqrt();
        assert!((j_star - j_f - exact).abs() <= 5.0 * se, "{} vs {exact}", j_star - j_f);
        assert!(exact >= -1e-9);
        assert!((j_star - policy_value(&DeterministicPolicy::greedy(&value_iteration(mdp)), mdp).unwrap()).abs() <= 5.0 * se_star);
    }
}

#[test]
fn bandit_suboptimality_closed_form() {
    let mdp = DiscountedMDP::new(vec![vec![vec![1.0], vec![1.0]]], vec![vec![1.0, 0.0]], vec![1.0], 0.5).unwrap();
    let worst = QTable::new(vec![vec![0.0, 1.0]]).unwrap();
    assert!((suboptimality(&worst, &mdp).unwrap() - 2.0).abs() < 1e-12);
    assert!(suboptimality(&value_iteration(&mdp), &mdp).unwrap().abs() < 1e-9);
}

fn brute_force_concentrability(s: &OfflineScenario) -> f64 {
    let mdp = s.mdp();
    s.class()
        .members()
        .iter()
        .flat_map(|f| {
            let occ = occupancy_series(mdp, &greedy(f));
            occ.into_iter()
                .zip(s.mu().weights().to_vec())
                .filter(|(d, _)| *d > 0.0)
                .map(|(d, m)| d / m)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn concentrability_matches_brute_force() {
    let mut cases = random_cases();
    for c in [4.0, 16.0, 64.0] {
        cases.push(
            make_amplification_mdp(&AmplificationMdpSpec {
                c_conc: c,
                ..Default::default()
            })
            .unwrap(),
        );
    }
    for s in &cases {
        let exact = concentrability(s.mu(), s.class(), s.mdp()).unwrap();
        let oracle = brute_force_concentrability(s);
        assert!((exact - oracle).abs() <= 1e-9 * oracle.max(1.0), "{exact} vs {oracle}");
        assert!(transfer_coefficient(s.mu(), s.class(), s.mdp()).unwrap() <= exact);
    }
}

#[test]
fn concentrability_reports_support_violation() {
    let s = make_random_offline_scenario(3, 2, 0.8, 2, 11).unwrap();
    let pi = DeterministicPolicy::greedy(s.class().member(0));
    let mut w = vec![1.0; 6];
    w[pi.action(0)] = 0.0;
    let total: f64 = w.iter().sum();
    let mu = SaDistribution::from_flat(3, 2, w.into_iter().map(|x| x / total).collect()).unwrap();
    // d0 has full support, so the policy visits (0, π(0)).
    assert!(occupancy(&pi, s.mdp()).unwrap().get(0, pi.action(0)) > 0.0);
    assert!(matches!(
        concentrability(&mu, s.class(), s.mdp()),
        Err(dbr_core::DbrError::SupportViolation { .. })
    ));
}

#[test]
fn offline_sampling_passes_chi_square() {
    let s = make_random_offline_scenario(4, 3, 0.9, 2, 21).unwrap();
    let n = 200_000;
    let ds = sample_offline_dataset(s.mdp(), s.mu(), n, 8).unwrap();
    let k = 12;
    let mut counts = vec![0.0; k];
    let mut next = vec![0.0; 4];
    for &(st, a, r, t) in ds.tuples() {
        counts[st * 3 + a] += 1.0;
        assert_eq!(r, s.mdp().reward(st, a));
        if (st, a) == (1, 2) {
            next[t] += 1.0;
        }
    }
    let chi = |obs: &[f64], p: &[f64], total: f64| -> f64 {
        obs.iter().zip(p).map(|(o, p)| (o - total * p).powi(2) / (total * p)).sum()
    };
    // Chi-square critical values at level 1e-4: df = 11 → 37.4, df = 3 → 21.1.
    assert!(chi(&counts, s.mu().weights(), n as f64) < 37.4);
    let total: f64 = next.iter().sum();
    assert!(chi(&next, s.mdp().transition(1, 2), total) < 21.1);
    assert_eq!(ds.gamma(), s.mdp().gamma());
    assert_eq!(ds, sample_offline_dataset(s.mdp(), s.mu(), n, 8).unwrap());
}

#[test]
fn offline_scenario_rejects_tampered_diagnostics() {
    let s = make_amplification_mdp(&AmplificationMdpSpec::default()).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
    doc["diagnostics"]["c_conc"] = serde_json::json!(15.0);
    assert!(OfflineScenario::from_json(&doc.to_string()).is_err());
}

proptest! {
    #[test]
    fn bellman_backup_contracts(seed in any::<u64>(), gamma in 0.0f64..0.99) {
        let s = make_random_offline_scenario(4, 2, gamma, 2, seed).unwrap();
        let mut rng = rng::stream(seed ^ 0x5eed);
        let mut table = || QTable::from_flat(4, 2, (0..8).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap();
        let (f, g) = (table(), table());
        let lhs = bellman_backup(&f, s.mdp()).sup_distance(&bellman_backup(&g, s.mdp()));
        prop_assert!(lhs <= gamma * f.sup_distance(&g) + 1e-12);
    }

    #[test]
    fn transfer_never_exceeds_concentrability(seed in any::<u64>()) {
        let s = make_random_offline_scenario(3, 2, 0.8, 4, seed).unwrap();
        let d = s.diagnostics();
        prop_assert!(d.c_transfer <= d.c_conc);
        prop_assert!(d.c_conc >= 1.0 - 1e-9);
    }
}
