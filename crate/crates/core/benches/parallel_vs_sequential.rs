use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xltwin::harness::sim::run_grid;
use xltwin::harness::{ExperimentConfig, SchemeId};
use xltwin::par::Execution;

fn config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.t_sim = 16;
    c.samples = 8;
    c.seeds = (0..8).collect();
    c
}

fn grid(c: &mut Criterion) {
    let cfg = config();
    let schemes = [SchemeId::ReactiveZf, SchemeId::ReactiveHybrid, SchemeId::DtDeterministic, SchemeId::Oracle];
    let none = |_: usize| None;
    let mut g = c.benchmark_group("closed_loop_grid");
    g.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_with_input(BenchmarkId::new(name, "k2_k8_8seeds"), &exec, |b, exec| {
            b.iter(|| run_grid(&cfg, &schemes, &[2, 8], &none, *exec).expect("grid run"))
        });
    }
    g.finish();
}

criterion_group!(benches, grid);
criterion_main!(benches);
