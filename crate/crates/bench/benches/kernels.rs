use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use bipartite_glass::complexity::{goe_rate, j_lower, upsilon0_pure};
use bipartite_glass::free_energy::{limiting_free_energy, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bipartite_glass::random_matrix::{sample_conditional_hessian, sample_goe, smallest_eigenvalue};
use bipartite_glass::simulator::{HamiltonianSample, SpherePoint};
use bipartite_glass::{Coefficient, MixtureSpec, SeedStream};

fn mixed() -> MixtureSpec {
    MixtureSpec {
        coefficients: vec![
            Coefficient { p: 1, q: 1, beta: 0.2 },
            Coefficient { p: 2, q: 2, beta: 0.15 },
        ],
        gamma: 0.4,
        h1: 0.1,
        h2: 0.05,
    }
}

fn analytic(c: &mut Criterion) {
    c.bench_function("goe_rate", |b| b.iter(|| goe_rate(black_box(-2.3))));
    c.bench_function("upper_bound_pure_33", |b| b.iter(|| upsilon0_pure(3, 3, 0.4, black_box(-1.8)).unwrap()));
    let spec = mixed();
    c.bench_function("free_energy_mixed", |b| {
        b.iter(|| limiting_free_energy(black_box(&spec), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap())
    });
    let normalized = MixtureSpec {
        coefficients: vec![
            Coefficient { p: 2, q: 2, beta: 0.8 },
            Coefficient { p: 3, q: 3, beta: 0.6 },
        ],
        gamma: 0.5,
        h1: 0.0,
        h2: 0.0,
    };
    c.bench_function("lower_bound_mixed", |b| b.iter(|| j_lower(&normalized, black_box(-1.6))));
}

fn sampling(c: &mut Criterion) {
    let mut rng = SeedStream::new(1).rng();
    c.bench_function("goe_100_min_eigenvalue", |b| {
        b.iter(|| smallest_eigenvalue(&sample_goe(100, &mut rng).entries).unwrap())
    });
    let consts = MixtureSpec::pure(2, 2, 1.0, 0.5).constants().unwrap();
    c.bench_function("conditional_hessian_10_10", |b| {
        b.iter(|| sample_conditional_hessian(&consts, 10, 10, -1.2, false, &mut rng).unwrap())
    });
    let spec = MixtureSpec::pure(3, 2, 1.0, 0.5);
    let h = HamiltonianSample::sample(&spec, 20, 20, SeedStream::new(2)).unwrap();
    let pt = SpherePoint::uniform(20, 20, &mut rng);
    c.bench_function("hamiltonian_value_20_20", |b| b.iter(|| h.value(black_box(&pt))));
    c.bench_function("hamiltonian_hessian_20_20", |b| b.iter(|| h.evaluate(black_box(&pt), true)));
}

criterion_group!(benches, analytic, sampling);
criterion_main!(benches);
