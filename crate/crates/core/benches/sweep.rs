use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diamond_node::diamond::{simulate_cycle, sweep_error_vs_cooperativity, CycleOptions, DiamondParams, SweepSettings};
use diamond_node::optimize::OptimizerSettings;
use diamond_node::par::{map_indexed, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn cycles(c: &mut Criterion) {
    let params: Vec<DiamondParams> = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
        .iter()
        .map(|&c| DiamondParams::for_cooperativity(c, 2000.0).unwrap())
        .collect();
    let options = CycleOptions::default();
    let mut group = c.benchmark_group("cycle_rows");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| map_indexed(exec, &params, |_, p| simulate_cycle(black_box(p), &options).unwrap().fidelity))
        });
    }
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let settings = SweepSettings {
        optimizer: OptimizerSettings {
            max_evaluations: 20,
            grid_points: 0,
            grid_starts: 0,
            random_starts: 0,
            ..Default::default()
        },
        ..SweepSettings::default()
    };
    let cs = [10.0, 30.0, 100.0, 300.0];
    let mut group = c.benchmark_group("error_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep_error_vs_cooperativity(black_box(&cs), &settings, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cycles, sweeps);
criterion_main!(benches);
