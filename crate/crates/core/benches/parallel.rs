//! Sequential versus data-parallel execution of the two embarrassingly
//! parallel workloads: rendering and sweeps.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use medusa_core::render::{render_plane, render_sphere};
use medusa_core::sweep::sweep;
use medusa_core::{run_mating, Bounds, Execution, MatingConfig, RationalAngle, View};

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::parallel()),
    ]
}

fn render(c: &mut Criterion) {
    let a: RationalAngle = "1/7".parse().unwrap();
    let b: RationalAngle = "1/3".parse().unwrap();
    let trace = run_mating(a, b, &MatingConfig::default()).trace;
    let m = trace.len().min(14);
    let bounds = Bounds::square(3.0);

    let mut g = c.benchmark_group("render");
    g.sample_size(20);
    for (name, exec) in modes() {
        g.bench_with_input(
            BenchmarkId::new("plane_256", name),
            &exec,
            |bench, &exec| {
                bench.iter(|| render_plane(black_box(&trace), m, &bounds, 256, 256, exec))
            },
        );
        g.bench_with_input(
            BenchmarkId::new("sphere_256", name),
            &exec,
            |bench, &exec| {
                bench.iter(|| render_sphere(black_box(&trace), m, 256, 256, &View::default(), exec))
            },
        );
    }
    g.finish();
}

fn sweeps(c: &mut Criterion) {
    let with: RationalAngle = "0/1".parse().unwrap();
    let cfg = MatingConfig::default();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(
            BenchmarkId::new("d15_with_0", name),
            &exec,
            |bench, &exec| bench.iter(|| sweep(black_box(15), with, &cfg, exec)),
        );
    }
    g.finish();
}

criterion_group!(benches, render, sweeps);
criterion_main!(benches);
