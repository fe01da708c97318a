use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cyclotower_core::correlation::{cyclic_correlation, lift, CylinderFunction, Method};
use cyclotower_core::montecarlo::{montecarlo_moments, MomentConfig};
use cyclotower_core::params::{build_word, presets};
use cyclotower_core::tower::Tower;

fn correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("cyclic_correlation");
    let params = presets::odd_random(4, 1).unwrap();
    let f = CylinderFunction::balanced(1, 3).unwrap();
    for level in [2usize, 3] {
        let values = lift(&f, level, &params).unwrap();
        group.bench_with_input(BenchmarkId::new("naive", values.len()), &values, |b, v| {
            b.iter(|| cyclic_correlation(black_box(v), Method::Naive, level))
        });
    }
    for level in [3usize, 4] {
        let values = lift(&f, level, &params).unwrap();
        group.bench_with_input(BenchmarkId::new("fft", values.len()), &values, |b, v| {
            b.iter(|| cyclic_correlation(black_box(v), Method::Fft, level))
        });
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let morse = presets::morse(20).unwrap();
    c.bench_function("build_word/morse_2^20", |b| b.iter(|| build_word(black_box(&morse), 20)));

    let params = presets::odd_random_default(3).unwrap();
    let f = CylinderFunction::balanced(1, 3).unwrap();
    c.bench_function("lift/odd_random_top", |b| {
        b.iter(|| lift(black_box(&f), params.top_level(), &params))
    });

    let tower = Tower::new(presets::odd_random(3, 3).unwrap());
    let labeling = tower.default_labeling(1).unwrap();
    c.bench_function("orbit_code/675", |b| {
        b.iter(|| tower.orbit_code(&tower.zero_point(), 1, 675, &labeling))
    });
}

fn montecarlo(c: &mut Criterion) {
    let f = CylinderFunction::balanced(1, 3).unwrap();
    let config = MomentConfig {
        h1: 3,
        q: vec![3, 5],
        target_level: 3,
        trials: 400,
        seed: 1,
        strict: true,
    };
    c.bench_function("montecarlo_moments/400", |b| {
        b.iter(|| montecarlo_moments(black_box(&f), &config, 9))
    });
}

criterion_group!(benches, correlation, construction, montecarlo);
criterion_main!(benches);
