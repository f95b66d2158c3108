use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dbr_lab::config::{ExperimentConfig, ExperimentKind, Params, ScenarioSource};
use dbr_lab::{execute, Exec};

fn sweep() -> ExperimentConfig {
    ExperimentConfig {
        id: "bench".into(),
        kind: ExperimentKind::RegressionSweep,
        scenario: Some(ScenarioSource::Benchmark),
        n_grid: vec![1_000, 10_000],
        episodes: None,
        replicates: 32,
        base_seed: 0,
        params: Params::default(),
        output_path: None,
    }
}

fn replicate_fan_out(c: &mut Criterion) {
    let cfg = sweep();
    let mut group = c.benchmark_group("regression_sweep_32_replicates");
    group.sample_size(10);
    for (label, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_function(label, |b| b.iter(|| black_box(execute(&cfg, exec).unwrap().rows.len())));
    }
    group.finish();
}

criterion_group!(benches, replicate_fan_out);
criterion_main!(benches);
