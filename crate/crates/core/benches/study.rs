use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use assoc2x2::montecarlo::{estimate_power, run_study, DistributionKind, Execution, StudyConfig};
use assoc2x2::JointDistribution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn single_distribution(c: &mut Criterion) {
    let q = JointDistribution::new(0.3, 0.2, 0.15, 0.35).unwrap();
    let mut group = c.benchmark_group("estimate_power");
    for replicates in [1_000, 10_000] {
        let cfg = StudyConfig {
            n_replicates: replicates,
            ..StudyConfig::default()
        };
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, replicates), &cfg, |b, cfg| {
                b.iter(|| estimate_power(0, DistributionKind::Alternative, &q, cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn full_study(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_study");
    group.sample_size(10);
    let cfg = StudyConfig::default();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "100x1000"), |b| {
            b.iter(|| run_study(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, single_distribution, full_study);
criterion_main!(benches);
