use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use harmonic_core::harness::{run_robustness_sweep, SweepConfig, SweepSpace};
use harmonic_core::par::Execution;

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("robustness_sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut cfg = SweepConfig::new(SweepSpace::L2, vec![3, 4, 5], vec![0.5], 16, 1);
        cfg.exec = exec;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_robustness_sweep(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
