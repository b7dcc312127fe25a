//! Benchmarks for the factorization kernels and full solves.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use adswitch_core::solver::{self, SolverConfig};
use adswitch_core::{kkt, problems, Matrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_jacobian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    let mut j = Matrix::zeros(m, n);
    for i in 0..m {
        for k in 0..n {
            j[(i, k)] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    j
}

fn bench_factorize(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (m, n) in [(3, 6), (10, 40), (55, 110)] {
        let j = random_jacobian(&mut rng, m, n);
        group.bench_function(format!("{m}x{n}"), |b| {
            b.iter(|| kkt::factorize(black_box(&j), 1e-10).unwrap())
        });
    }
    group.finish();
}

fn bench_projection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let j = random_jacobian(&mut rng, 20, 80);
    let factors = kkt::factorize(&j, 1e-10).unwrap();
    let g: Vec<f64> = (0..80).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    c.bench_function("project_tangent 20x80", |b| {
        b.iter(|| kkt::project_tangent(black_box(&factors), black_box(&g)))
    });
    let cvec: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    c.bench_function("normal_direction 20x80", |b| {
        b.iter(|| kkt::normal_direction(black_box(&factors), black_box(&cvec), 1e-5).unwrap())
    });
}

fn bench_solve(c: &mut Criterion) {
    let config = SolverConfig::default();
    for name in ["HS8", "MARATOS", "BT1"] {
        let p = problems::builtin(name).unwrap();
        c.bench_function(&format!("solve {name}"), |b| {
            b.iter_batched(
                || p.clone(),
                |p| solver::solve(&p, &config).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    let sphere = problems::sphere_lin(20).with_f_star(None);
    c.bench_function("solve SPHERE-LIN n=20", |b| {
        b.iter_batched(
            || sphere.clone(),
            |p| solver::solve(&p, &config).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_factorize, bench_projection, bench_solve);
criterion_main!(benches);
