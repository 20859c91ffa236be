use std::hint::black_box;

use carnot_core::calculus::{horizontal_hessian_sym, radial_hessian};
use carnot_core::estimates::{ball_volume, verify_pucci_annihilation};
use carnot_core::pucci::{pucci_plus, sym_eigenvalues};
use carnot_core::{
    CounterexampleConfig, Ellipticity, FdScheme, GlueMode, GroupDescriptor, QuadratureSpec, RadialProfile, ScalarField,
    SymMatrix,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn test_matrix(m: usize) -> SymMatrix {
    SymMatrix::from_fn(m, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0 + if i == j { 0.5 } else { 0.0 })
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi");
    for m in [2, 4, 8, 16] {
        let a = test_matrix(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &a, |b, a| b.iter(|| sym_eigenvalues(black_box(a)).unwrap()));
    }
    group.finish();
    let e = Ellipticity::new(0.5, 2.0).unwrap();
    let a = test_matrix(4);
    c.bench_function("pucci_plus/4", |b| b.iter(|| pucci_plus(black_box(&a), &e).unwrap()));
}

fn hessians(c: &mut Criterion) {
    let g = GroupDescriptor::heisenberg(2).unwrap();
    let x = [0.3, -0.2, 0.5, 0.1, 0.4];
    let s = FdScheme::default();
    let analytic = ScalarField::rho4(2);
    let numeric = ScalarField::rho4(2).without_derivatives();
    c.bench_function("hessian_sym/analytic", |b| b.iter(|| horizontal_hessian_sym(&g, &analytic, black_box(&x), &s).unwrap()));
    c.bench_function("hessian_sym/fd", |b| b.iter(|| horizontal_hessian_sym(&g, &numeric, black_box(&x), &s).unwrap()));
    let p = RadialProfile::power(4.0);
    c.bench_function("radial_hessian", |b| b.iter(|| radial_hessian(&g, &p, black_box(&x)).unwrap()));
}

fn estimates(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimates");
    group.sample_size(10);
    let g = GroupDescriptor::heisenberg(1).unwrap();
    let quad = QuadratureSpec::monte_carlo(100_000, 1).unwrap();
    group.bench_function("ball_volume/1e5", |b| b.iter(|| ball_volume(&g, black_box(1.0), &quad).unwrap()));
    let cfg = CounterexampleConfig::new(1, 0.5, vec![0.125], Vec::new(), GlueMode::PaperLiteral).unwrap();
    group.bench_function("annihilation/1e3", |b| b.iter(|| verify_pucci_annihilation(&cfg, 0.125, 1000, 1, 1e-8).unwrap()));
    group.finish();
}

criterion_group!(benches, eigen, hessians, estimates);
criterion_main!(benches);
