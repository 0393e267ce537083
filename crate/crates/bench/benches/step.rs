use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use popflow_bench::preset_state;
use std::hint::black_box;

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for (name, n) in [("fig1a", 64), ("fig1a", 128), ("fig3a", 128), ("fig4a", 128)] {
        let (model, state) = preset_state(name, n);
        group.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter(|| model.rhs(black_box(&state.fields)).unwrap())
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (name, n) in [("fig1a", 128), ("fig4a", 128), ("case1-safe", 64)] {
        let (model, state) = preset_state(name, n);
        group.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter(|| model.step_imex(black_box(&state), 1e-3, 1e8).unwrap().unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, step);
criterion_main!(benches);
