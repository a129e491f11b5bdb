use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use turing_core::analysis::cosine_spectrum;
use turing_core::linstab::scan_spectrum;
use turing_core::pde::{random_ic, Stepper};
use turing_core::theorems::classify;
use turing_core::{BrusselatorParams, CutoffPolicy, DiffusionPair, DomainSpec, Grid, LocalModel, Model};

fn p_point() -> (Model, DiffusionPair) {
    (
        BrusselatorParams::unit_rates(2.0, 15.0).unwrap().into(),
        DiffusionPair::new(0.1, 1.0).unwrap(),
    )
}

fn linear_stability(c: &mut Criterion) {
    let (model, d) = p_point();
    let j = model.jacobian();
    let mut g = c.benchmark_group("scan_spectrum");
    for k in [1, 2, 3] {
        let dom = DomainSpec::new(k, 19.365).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &dom, |b, dom| {
            b.iter(|| scan_spectrum(black_box(&j), &d, dom, CutoffPolicy::Analytic).unwrap())
        });
    }
    g.finish();
    let dom = DomainSpec::new(2, 19.365).unwrap();
    c.bench_function("classify/2d", |b| b.iter(|| classify(black_box(&j), &d, &dom).unwrap()));
}

fn ftcs_step(c: &mut Criterion) {
    let (model, d) = p_point();
    let mut g = c.benchmark_group("ftcs_step");
    for (k, n) in [(1, 250), (2, 100), (2, 250)] {
        let grid = Grid::with_side(k, n, 19.365).unwrap();
        let mut field = random_ic(grid, 0.01, 1).unwrap();
        let mut stepper = Stepper::new(&grid);
        let dt = 1e-3;
        g.bench_function(BenchmarkId::new(format!("{k}d"), n), |b| {
            b.iter(|| stepper.advance(black_box(&mut field), &model, &d, dt, 1).unwrap())
        });
    }
    g.finish();
}

fn spectrum(c: &mut Criterion) {
    let grid = Grid::with_side(1, 250, 19.365).unwrap();
    let field = random_ic(grid, 0.01, 1).unwrap();
    c.bench_function("cosine_spectrum/250", |b| b.iter(|| cosine_spectrum(black_box(&field))));
}

criterion_group!(benches, linear_stability, ftcs_step, spectrum);
criterion_main!(benches);
