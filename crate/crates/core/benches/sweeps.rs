use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use herald_core::exec::map_ordered;
use herald_core::metrics::{expected_trials_mc, plus_plus};
use herald_core::photonics::simulate_resource;
use herald_core::ppp::run_ppp;
use herald_core::{DetectorModel, Execution, NodeParams, SourceModel, TrialBasis};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn trials_mc(c: &mut Criterion) {
    let node = NodeParams::symmetric(0.1, 0.0).unwrap();
    let det = DetectorModel::new(1.0, 0.5).unwrap();
    let mut group = c.benchmark_group("trials_mc");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 200_000), &exec, |b, &exec| {
            b.iter(|| {
                expected_trials_mc(&node, &det, TrialBasis::Ppp, black_box(200_000), 7, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn simulated_grid(c: &mut Criterion) {
    let points: Vec<(f64, f64)> = (0..8)
        .flat_map(|i| (0..8).map(move |j| (0.05 + 0.12 * i as f64, 0.3 + 0.1 * j as f64)))
        .collect();
    let mut group = c.benchmark_group("simulated_grid");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, points.len()), &exec, |b, &exec| {
            b.iter(|| {
                map_ordered(exec, &points, |&(a, eta)| {
                    let node = NodeParams::symmetric(a, 0.4).unwrap();
                    let det = DetectorModel::new(eta, 0.0).unwrap();
                    let r = simulate_resource(&node, &SourceModel::ideal(), &det).unwrap();
                    run_ppp(&plus_plus(), &r, &r).unwrap().p_success
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, trials_mc, simulated_grid);
criterion_main!(benches);
