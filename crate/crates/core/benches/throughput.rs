use ahasp_core::alns::{AlnsConfig, Budget};
use ahasp_core::baselines::{brute_force, BruteLimits};
use ahasp_core::experiment::{bench, Algorithm, BenchConfig};
use ahasp_core::generate::{generate, GenSpec};
use ahasp_core::parallel::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn oracle(c: &mut Criterion) {
    let inst = generate(&GenSpec::new(5, 2, 2, 1)).unwrap();
    let mut g = c.benchmark_group("brute_force_n5");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(brute_force(&inst, BruteLimits::default(), exec).unwrap().optimal_objective))
        });
    }
    g.finish();
}

fn repetitions(c: &mut Criterion) {
    let instances: Vec<_> = (0..4).map(|k| generate(&GenSpec::new(15, 3, 6, k)).unwrap()).collect();
    let mut g = c.benchmark_group("bench_4x4_alns");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = BenchConfig {
            algorithms: vec![Algorithm::Alns],
            seeds: (0..4).collect(),
            alns: AlnsConfig { budget: Budget::Iterations(20), log: false, ..AlnsConfig::default() },
            exec,
        };
        g.bench_function(name, |b| b.iter(|| black_box(bench(&instances, &cfg).unwrap().runs.len())));
    }
    g.finish();
}

criterion_group!(benches, oracle, repetitions);
criterion_main!(benches);
