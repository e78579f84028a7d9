use cmop_bench::{fixture, label, SHAPES};
use cmop_core::projection::project_rows;
use cmop_core::solvers::{gd_solve, pgd_solve, real_augmented_pgd};
use cmop_core::{Precomputed, SolverConfig, StepSize};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn precompute(c: &mut Criterion) {
    let mut group = c.benchmark_group("precompute");
    for shape in SHAPES {
        let f = fixture(shape.0, shape.1, shape.2);
        group.bench_with_input(BenchmarkId::from_parameter(label(shape)), &f, |b, f| {
            b.iter(|| Precomputed::new(black_box(&f.instance)).unwrap())
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    // Ten iterations per sample; tau is tiny so none stop early.
    let cfg = SolverConfig::new(StepSize::FractionOfOneOverL(0.9))
        .tau(f64::MIN_POSITIVE)
        .max_iter(10)
        .record_trace(false);
    let mut group = c.benchmark_group("ten_iterations");
    for shape in SHAPES {
        let f = fixture(shape.0, shape.1, shape.2);
        group.bench_with_input(BenchmarkId::new("pgd", label(shape)), &f, |b, f| {
            b.iter(|| pgd_solve(&f.pre, &f.instance, black_box(&f.point), &f.ball, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gd", label(shape)), &f, |b, f| {
            b.iter(|| gd_solve(&f.pre, &f.instance, black_box(&f.point), &cfg).unwrap())
        });
    }
    let f = fixture(10, 5, 8);
    group.bench_function("real_augmented/m10_n5_k8", |b| {
        b.iter(|| real_augmented_pgd(&f.instance, black_box(&f.point), &f.ball, &cfg, f.pre.lipschitz()).unwrap())
    });
    group.finish();
}

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_rows");
    for shape in SHAPES {
        let f = fixture(shape.0, shape.1, shape.2);
        group.bench_with_input(BenchmarkId::from_parameter(label(shape)), &f, |b, f| {
            b.iter(|| project_rows(black_box(&f.point), &f.ball))
        });
    }
    group.finish();
}

criterion_group!(benches, precompute, iteration, projection);
criterion_main!(benches);
