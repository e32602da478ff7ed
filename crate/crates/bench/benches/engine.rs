use criterion::{black_box, criterion_group, criterion_main, Criterion};
use zetawb_core::*;

const CAT: IntMatrix2 = [[2, 1], [1, 1]];

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumeration");
    g.sample_size(10);
    g.bench_function("cat n<=12", |b| {
        b.iter(|| toral_suspension_catalog(&CAT, &RoofFunction::constant(1.0), black_box(12)))
    });
    g.bench_function("cat mixing roof n<=12", |b| {
        b.iter(|| toral_suspension_catalog(&CAT, &RoofFunction::mixing_default(), black_box(12)))
    });
    g.bench_function("full 2-shift n<=14", |b| {
        let a = Adjacency::full(2).unwrap();
        b.iter(|| sft_catalog(&a, &RoofFunction::constant(1.0), &Cocycle::default(), black_box(14)))
    });
    g.bench_function("modular torus T<=10", |b| b.iter(|| modular_torus_catalog(black_box(10.0))));
    g.bench_function("bolza words <=5", |b| b.iter(|| fuchsian_catalog(&bolza_group(), black_box(5))));
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let catalog = toral_suspension_catalog(&CAT, &RoofFunction::mixing_default(), 14).unwrap();
    let engine = ZetaEngine::new(&catalog, TruncationPolicy::new(catalog.t_complete)).unwrap();
    let z = Complex64::new(1.6, 0.7);
    let mut g = c.benchmark_group("evaluation");
    g.bench_function("engine setup", |b| {
        b.iter(|| ZetaEngine::new(black_box(&catalog), TruncationPolicy::new(catalog.t_complete)))
    });
    g.bench_function("ruelle_log", |b| b.iter(|| engine.ruelle_log(black_box(z))));
    g.bench_function("det_log_1", |b| b.iter(|| engine.dyn_determinant_log(1, black_box(z))));
    g.bench_function("flat_trace n=8", |b| b.iter(|| engine.flat_trace(1, black_box(z), 8, 0.0)));
    g.bench_function("mock polynomial degree 12", |b| b.iter(|| engine.mock_determinant_poly(1, black_box(z), 12)));
    g.finish();
}

fn counting(c: &mut Criterion) {
    let torus = modular_torus_catalog(10.0).unwrap();
    let grid: Vec<f64> = (0..64).map(|i| 4.0 + 0.1 * i as f64).collect();
    let mut g = c.benchmark_group("counting");
    g.bench_function("li(1e6)", |b| b.iter(|| li(black_box(1e6))));
    g.bench_function("chebyshev 64 points", |b| {
        let xs: Vec<f64> = grid.iter().map(|t| t.exp()).collect();
        b.iter(|| chebyshev_functions(&torus, 1.0, black_box(&xs)))
    });
    g.bench_function("entropy fit", |b| b.iter(|| entropy_estimate(black_box(&torus))));
    g.finish();
}

criterion_group!(benches, enumeration, evaluation, counting);
criterion_main!(benches);
