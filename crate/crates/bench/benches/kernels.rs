use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use obata_core::geometry::{christoffel_at, obata_residual_at, riemann_at, CURVATURE_STEP, DEFAULT_STEP};
use obata_core::{
    build_model, classify_coercivity, classify_pair, parse, solve_profile, ClassifyOptions, ProfileOptions, Window,
};

fn profiles(c: &mut Criterion) {
    let f = parse("s^3 - s").unwrap();
    let opts = ProfileOptions::default();
    c.bench_function("solve_profile s^3 - s over [-50, 50]", |b| {
        b.iter(|| solve_profile(black_box(&f), 2.0, 0.0, 50.0, &opts).unwrap())
    });
    let e = parse("e^(-s)*sin(s)^2 / (2 + cos(s))").unwrap();
    c.bench_function("parse and differentiate", |b| {
        b.iter(|| {
            parse(black_box("e^(-s)*sin(s)^2 / (2 + cos(s))"))
                .unwrap()
                .differentiate()
        })
    });
    c.bench_function("eval", |b| b.iter(|| e.eval(black_box(0.7)).unwrap()));
}

fn tensors(c: &mut Criterion) {
    let m = build_model(&parse("cos(s)").unwrap(), 0.0, 3, &ClassifyOptions::default()).unwrap();
    let x = [1.1, 0.9, 0.4];
    let w = m.solution();
    c.bench_function("christoffel 3d", |b| {
        b.iter(|| christoffel_at(&m.chart, black_box(&x), DEFAULT_STEP).unwrap())
    });
    c.bench_function("riemann 3d", |b| {
        b.iter(|| riemann_at(&m.chart, black_box(&x), CURVATURE_STEP).unwrap())
    });
    c.bench_function("obata residual 3d", |b| {
        b.iter(|| obata_residual_at(&m.chart, &w, m.f(), black_box(&x)).unwrap())
    });
}

fn classifiers(c: &mut Criterion) {
    let f = parse("s^3 - s").unwrap();
    let opts = ClassifyOptions::default();
    c.bench_function("classify_pair s^3 - s", |b| {
        b.iter(|| classify_pair(&f, black_box(-std::f64::consts::SQRT_2), &opts).unwrap())
    });
    c.bench_function("classify_coercivity s^3 - s", |b| {
        b.iter(|| classify_coercivity(&f, Window::symmetric(10.0), 64, 1e-8, 1e-9).unwrap())
    });
}

criterion_group!(benches, profiles, tensors, classifiers);
criterion_main!(benches);
