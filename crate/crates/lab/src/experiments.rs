//! Seeded sweeps over scenarios, one per experiment kind.

use std::fs;
use std::path::Path;
use std::time::Instant;

use dbr_core::domain::{sample_dataset, FunctionTable, Scenario};
use dbr_core::offline::{dbr_minimax_fit, sample_offline_dataset, suboptimality, OfflineScenario};
use dbr_core::online::{default_beta, golf_dbr_run, EpisodeLog, GolfConfig, OnlineScenario};
use dbr_core::regression::{
    dbr_adaptive_fit, dbr_fit, dbr_population, erm_fit, erm_population, linf_fit, star_fit_population, DbrConfig,
    FitResult,
};

use crate::acceptance::{verify_acceptance, AcceptanceReport};
use crate::config::{load_scenario, ExperimentConfig, ExperimentKind, Family, LoadedScenario};
use crate::error::{LabError, Result};
use crate::exec::Exec;
use crate::output::{write_episode_log, write_manifest, write_rows, Manifest, ResultRow, RunFiles};

/// Everything an experiment produced, before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    /// `(label, log)` per online run.
    pub episode_logs: Vec<(String, Vec<EpisodeLog>)>,
    pub report: Option<AcceptanceReport>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: RunFiles,
    pub outcome: Outcome,
}

impl RunSummary {
    /// Ids of failed acceptance criteria; empty for other kinds.
    pub fn failed(&self) -> Vec<String> {
        self.outcome.report.as_ref().map(|r| r.failed()).unwrap_or_default()
    }
}

/// Row builder bound to one replicate.
struct Rows<'a> {
    id: &'a str,
    replicate: usize,
    seed: u64,
    out: Vec<ResultRow>,
}

impl<'a> Rows<'a> {
    fn new(id: &'a str, replicate: usize, seed: u64) -> Self {
        Self {
            id,
            replicate,
            seed,
            out: Vec::new(),
        }
    }

    fn push(&mut self, n: Option<usize>, algorithm: &str, metric: &str, value: f64) {
        self.out.push(ResultRow {
            experiment: self.id.to_string(),
            replicate: self.replicate,
            seed: self.seed,
            n,
            algorithm: algorithm.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    fn fit(&mut self, n: Option<usize>, algorithm: &str, fit: &FitResult, s: &Scenario) {
        let f = s.class().member(fit.index);
        self.push(n, algorithm, "index", fit.index as f64);
        self.push(n, algorithm, "objective", fit.objective_value);
        self.table(n, algorithm, f, s);
    }

    fn table(&mut self, n: Option<usize>, algorithm: &str, f: &FunctionTable, s: &Scenario) {
        self.push(n, algorithm, "r_train", s.r_train(f));
        self.push(n, algorithm, "r_test", s.r_test(f));
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn seed_of(cfg: &ExperimentConfig, replicate: usize) -> u64 {
    cfg.base_seed.wrapping_add(replicate as u64)
}

/// Runs the replicates and merges their rows in replicate order.
fn fan_out<F>(cfg: &ExperimentConfig, exec: Exec, per_replicate: F) -> Result<Vec<ResultRow>>
where
    F: Fn(&mut Rows<'_>) -> Result<()> + Sync + Send,
{
    let chunks = exec.map(cfg.replicates, |r| {
        let mut rows = Rows::new(&cfg.id, r, seed_of(cfg, r));
        per_replicate(&mut rows).map(|_| rows.out)
    });
    let mut out = Vec::new();
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

fn regression(cfg: &ExperimentConfig, s: &Scenario, exec: Exec) -> Result<Vec<ResultRow>> {
    let p = &cfg.params;
    let k = s.class().len();
    let mut head = Rows::new(&cfg.id, 0, cfg.base_seed);
    head.push(None, "scenario", "eps_inf", s.eps_inf());
    head.push(None, "scenario", "c_inf", s.c_inf());
    head.push(None, "scenario", "class_size", k as f64);

    let population_tau = p.resolve_tau(s.eps_inf(), k, cfg.n_grid.last().copied().unwrap_or(1));
    match cfg.kind {
        ExperimentKind::LowerBound | ExperimentKind::RegressionSweep => {
            head.fit(None, "erm_population", &erm_population(s.f_star(), s.d_train(), s.class()), s);
            let dbr = dbr_population(s.f_star(), s.d_train(), s.class(), &DbrConfig::new(population_tau)?);
            head.push(None, "dbr_population", "tau", population_tau);
            head.fit(None, "dbr_population", &dbr, s);
        }
        ExperimentKind::StarLinf if k == 2 => {
            let star = star_fit_population(s.class(), s.f_star(), s.d_train(), p.alpha_grid)?;
            head.push(None, "star_population", "alpha", star.alpha);
            head.push(None, "star_population", "objective", star.objective);
            head.table(None, "star_population", &star.blend, s);
        }
        _ => {}
    }
    let mut rows = head.out;

    let kind = cfg.kind;
    rows.extend(fan_out(cfg, exec, |out| {
        for &n in &cfg.n_grid {
            let ds = sample_dataset(s, n, out.seed)?;
            out.fit(Some(n), "erm", &erm_fit(&ds, s.class())?, s);
            match kind {
                ExperimentKind::AdaptiveTau => {
                    let fit = dbr_adaptive_fit(&ds, s.class(), p.delta)?;
                    let alg = "dbr_adaptive";
                    out.push(Some(n), alg, "index", fit.index as f64);
                    out.push(Some(n), alg, "tau_hat", fit.tau_hat);
                    out.push(Some(n), alg, "tau_min", fit.tau_min);
                    out.push(Some(n), alg, "empty_version_space", flag(fit.empty_version_space));
                    out.table(Some(n), alg, s.class().member(fit.index), s);
                }
                ExperimentKind::StarLinf => {
                    out.fit(Some(n), "linf", &linf_fit(&ds, s.class())?, s);
                }
                _ => {
                    let tau = p.resolve_tau(s.eps_inf(), k, n);
                    out.push(Some(n), "dbr", "tau", tau);
                    out.fit(Some(n), "dbr", &dbr_fit(&ds, s.class(), &DbrConfig::new(tau)?)?, s);
                }
            }
        }
        Ok(())
    })?);
    Ok(rows)
}

fn offline(cfg: &ExperimentConfig, s: &OfflineScenario, exec: Exec) -> Result<Vec<ResultRow>> {
    let p = &cfg.params;
    let d = s.diagnostics();
    let mut head = Rows::new(&cfg.id, 0, cfg.base_seed);
    head.push(None, "scenario", "eps_inf", d.eps_inf);
    head.push(None, "scenario", "c_conc", d.c_conc);
    head.push(None, "scenario", "c_transfer", d.c_transfer);
    head.push(None, "scenario", "class_size", s.class().len() as f64);
    let mut rows = head.out;

    let variants = p.variants();
    rows.extend(fan_out(cfg, exec, |out| {
        for &n in &cfg.n_grid {
            let ds = sample_offline_dataset(s.mdp(), s.mu(), n, out.seed)?;
            let tau = p.resolve_tau(d.eps_inf, s.class().len(), n);
            for &filtered in &variants {
                let alg = if filtered { "dbr_minimax" } else { "minimax" };
                let fit = dbr_minimax_fit(&ds, s.class(), tau, filtered)?;
                out.push(Some(n), alg, "tau", tau);
                out.push(Some(n), alg, "index", fit.index as f64);
                out.push(Some(n), alg, "objective", fit.objective_value);
                out.push(Some(n), alg, "suboptimality", suboptimality(s.class().member(fit.index), s.mdp())?);
            }
        }
        Ok(())
    })?);
    Ok(rows)
}

fn online(cfg: &ExperimentConfig, s: &OnlineScenario, exec: Exec) -> Result<Outcome> {
    let p = &cfg.params;
    let d = s.diagnostics();
    let episodes = cfg.episodes.expect("validated");
    let horizon = s.mdp().horizon();
    let tau = p.resolve_tau(d.eps_inf, d.product_size, episodes);
    let beta = p
        .beta
        .unwrap_or_else(|| default_beta(p.beta_c, episodes, horizon, d.product_size, p.delta));
    let checkpoints = if cfg.n_grid.is_empty() {
        vec![episodes]
    } else {
        cfg.n_grid.clone()
    };

    let mut head = Rows::new(&cfg.id, 0, cfg.base_seed);
    head.push(None, "scenario", "eps_inf", d.eps_inf);
    head.push(None, "scenario", "c_cov", d.c_cov);
    head.push(None, "scenario", "product_size", d.product_size as f64);
    head.push(None, "scenario", "tau", tau);
    head.push(None, "scenario", "beta", beta);
    let mut rows = head.out;

    let reference = s.reference_member();
    let track = p.track_reference.then_some(reference.as_slice());
    let variants = p.variants();
    let runs = exec.map(cfg.replicates, |r| -> Result<_> {
        let seed = seed_of(cfg, r);
        let mut out = Rows::new(&cfg.id, r, seed);
        let mut logs = Vec::new();
        for &filtered in &variants {
            let alg = if filtered { "golf_dbr" } else { "golf" };
            let config = GolfConfig {
                episodes,
                tau,
                beta,
                filtered,
                seed,
            };
            let run = golf_dbr_run(s.mdp(), s.class(), &config, track)?;
            for &t in &checkpoints {
                let total = run.regret.at(t);
                out.push(Some(t), alg, "cumulative_regret", total);
                out.push(Some(t), alg, "average_regret", total / t as f64);
            }
            if let Some(survived) = run.tracked_survived {
                out.push(Some(episodes), alg, "reference_survived", flag(survived));
            }
            logs.push((format!("{alg}.r{r}"), run.logs));
        }
        Ok((out.out, logs))
    });
    let mut episode_logs = Vec::new();
    for run in runs {
        let (r, l) = run?;
        rows.extend(r);
        episode_logs.extend(l);
    }
    Ok(Outcome {
        rows,
        episode_logs,
        report: None,
    })
}

/// Rows for an acceptance report: measured value, bound and verdict per
/// criterion. Runtimes stay out of the CSV so reruns compare equal.
pub fn verify_outcome(cfg: &ExperimentConfig, report: AcceptanceReport) -> Outcome {
    let mut rows = Rows::new(&cfg.id, 0, cfg.base_seed);
    for c in &report.criteria {
        rows.push(None, &c.id, "measured", c.measured);
        rows.push(None, &c.id, "bound", c.bound);
        rows.push(None, &c.id, "passed", flag(c.passed));
    }
    Outcome {
        rows: rows.out,
        episode_logs: Vec::new(),
        report: Some(report),
    }
}

/// Runs the experiment in memory.
pub fn execute(cfg: &ExperimentConfig, exec: Exec) -> Result<Outcome> {
    cfg.validate()?;
    let family = match cfg.kind {
        ExperimentKind::Verify => return Ok(verify_outcome(cfg, verify_acceptance(exec))),
        ExperimentKind::OfflineRl => Family::Offline,
        ExperimentKind::OnlineRl => Family::Online,
        _ => Family::Regression,
    };
    let source = cfg.scenario.as_ref().expect("validated");
    let rows = match load_scenario(source, family)? {
        LoadedScenario::Regression(s) => regression(cfg, &s, exec)?,
        LoadedScenario::Offline(s) => offline(cfg, &s, exec)?,
        LoadedScenario::Online(s) => return online(cfg, &s, exec),
    };
    Ok(Outcome {
        rows,
        ..Outcome::default()
    })
}

/// Runs the experiment and writes `<id>.csv`, `<id>.manifest.json` and,
/// for online runs, one episode log per run into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, exec: Exec) -> Result<RunSummary> {
    let start = Instant::now();
    let outcome = execute(cfg, exec)?;
    write_outcome(cfg, out_dir, outcome, start)
}

pub fn write_outcome(cfg: &ExperimentConfig, out_dir: &Path, outcome: Outcome, start: Instant) -> Result<RunSummary> {
    fs::create_dir_all(out_dir).map_err(|e| LabError::io(out_dir, e))?;

    let results = out_dir.join(format!("{}.csv", cfg.id));
    write_rows(&results, &outcome.rows)?;
    let mut episode_logs = Vec::new();
    for (label, logs) in &outcome.episode_logs {
        let path = out_dir.join(format!("{}.episodes.{label}.csv", cfg.id));
        write_episode_log(&path, logs)?;
        episode_logs.push(path);
    }
    let manifest = out_dir.join(format!("{}.manifest.json", cfg.id));
    let name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    write_manifest(
        &manifest,
        &Manifest {
            id: cfg.id.clone(),
            kind: cfg.kind.name().to_string(),
            code_version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            rows: outcome.rows.len(),
            results: name(&results),
            episode_logs: episode_logs.iter().map(|p| name(p)).collect(),
            config: cfg.to_value(),
        },
    )?;
    Ok(RunSummary {
        files: RunFiles {
            results,
            manifest,
            episode_logs,
        },
        outcome,
    })
}
