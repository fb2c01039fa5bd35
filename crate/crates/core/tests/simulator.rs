use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use bipartite_glass::free_energy::{limiting_free_energy, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bipartite_glass::numerics::RunningStats;
use bipartite_glass::random_matrix::{eigenvalues, index_of, sample_conditional_hessian};
use bipartite_glass::simulator::*;
use bipartite_glass::{Coefficient, MixtureSpec, SeedStream};

fn mixed() -> MixtureSpec {
    MixtureSpec {
        coefficients: vec![
            Coefficient { p: 1, q: 1, beta: 0.6 },
            Coefficient { p: 2, q: 1, beta: 0.5 },
            Coefficient { p: 1, q: 3, beta: 0.4 },
        ],
        gamma: 0.5,
        h1: 0.3,
        h2: -0.2,
    }
}

fn xi(spec: &MixtureSpec, x: f64, y: f64) -> f64 {
    spec.coefficients
        .iter()
        .map(|c| c.beta * c.beta * x.powi(c.p as i32) * y.powi(c.q as i32))
        .sum()
}

/// Moves `t` along the product of geodesics through `pt` with tangent velocity `(a, b)`.
fn geodesic(pt: &SpherePoint, a: &DVector<f64>, b: &DVector<f64>, t: f64) -> SpherePoint {
    let arc = |x: &DVector<f64>, d: &DVector<f64>| {
        let r = (x.len() as f64).sqrt();
        let speed = d.norm();
        if speed == 0.0 {
            return x.clone();
        }
        let theta = t * speed / r;
        x * theta.cos() + d * (r * theta.sin() / speed)
    };
    SpherePoint {
        u: arc(&pt.u, a),
        v: arc(&pt.v, b),
    }
}

#[test]
fn energy_variance_matches_covariance() {
    let spec = MixtureSpec { h1: 0.0, h2: 0.0, ..mixed() };
    let (n1, n2) = (3, 4);
    let mut rng = SeedStream::new(11).rng();
    let pairs: Vec<(SpherePoint, SpherePoint)> = (0..20)
        .map(|_| (SpherePoint::uniform(n1, n2, &mut rng), SpherePoint::uniform(n1, n2, &mut rng)))
        .collect();
    let samples = 10_000;
    let mut prods = vec![RunningStats::default(); pairs.len()];
    let mut var = RunningStats::default();
    for s in 0..samples {
        let h = HamiltonianSample::sample(&spec, n1, n2, SeedStream::new(12).child(s)).unwrap();
        for (k, (x, y)) in pairs.iter().enumerate() {
            let (hx, hy) = (h.value(x), h.value(y));
            prods[k].push(hx * hy);
            if k == 0 {
                var.push(hx * hx);
            }
        }
    }
    let n = (n1 + n2) as f64;
    let xi11 = xi(&spec, 1.0, 1.0);
    assert!((var.mean() / (n * xi11) - 1.0).abs() < 0.03, "Var H / N xi(1,1) = {}", var.mean() / (n * xi11));
    for (k, (x, y)) in pairs.iter().enumerate() {
        let (r1, r2) = x.overlaps(y);
        let target = n * xi(&spec, r1, r2);
        let z = (prods[k].mean() - target) / prods[k].stderr();
        assert!(z.abs() < 5.0, "pair {k}: z = {z}");
    }
}

#[test]
fn riemannian_derivatives_match_finite_differences() {
    let spec = mixed();
    let h = HamiltonianSample::sample(&spec, 4, 3, SeedStream::new(3)).unwrap();
    let mut rng = SeedStream::new(4).rng();
    let pt = SpherePoint::uniform(4, 3, &mut rng);
    let e = h.evaluate(&pt, true);
    let g = e.grad_u.norm().hypot(e.grad_v.norm());
    assert!(e.grad_u.dot(&pt.u).abs() <= 1e-10 * g);
    assert!(e.grad_v.dot(&pt.v).abs() <= 1e-10 * g);
    let hess = e.hessian.unwrap();
    let (bu, bv) = (tangent_basis(&pt.u), tangent_basis(&pt.v));
    for _ in 0..10 {
        let ca = DVector::from_fn(3, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let cb = DVector::from_fn(2, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let (a, b) = (&bu * &ca, &bv * &cb);
        let f = |t: f64| h.value(&geodesic(&pt, &a, &b, t));
        let step = 1e-4;
        let first = (f(step) - f(-step)) / (2.0 * step);
        let exact = e.grad_u.dot(&a) + e.grad_v.dot(&b);
        assert_relative_eq!(first, exact, max_relative = 1e-5, epsilon = 1e-8);
        let step = 1e-3;
        let second = (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step);
        let c = DVector::from_iterator(5, ca.iter().chain(cb.iter()).copied());
        let exact2 = c.dot(&(&hess * &c));
        assert_relative_eq!(second, exact2, max_relative = 1e-4, epsilon = 1e-5);
    }
}

#[test]
fn bilinear_minima_match_svd() {
    let spec = MixtureSpec::pure(1, 1, 1.0, 0.5);
    for s in 0..20 {
        let h = HamiltonianSample::sample(&spec, 2, 2, SeedStream::new(20).child(s)).unwrap();
        let g = DMatrix::from_fn(2, 2, |i, j| {
            let mut pt = SpherePoint::north_pole(2, 2);
            pt.u.fill(0.0);
            pt.v.fill(0.0);
            pt.u[i] = 2f64.sqrt();
            pt.v[j] = 2f64.sqrt();
            h.value(&pt) / 2.0
        });
        let top = g.singular_values().max();
        let search = find_local_minima(&h, 30, &DescentOptions::default(), SeedStream::new(21).child(s)).unwrap();
        // the two minima are (a, -b) and (-a, b) for the top singular pair (a, b)
        assert_eq!(search.count_below(f64::INFINITY, Some(0)), 2, "sample {s}");
        assert_relative_eq!(search.best_energy(), -2.0 * top, max_relative = 1e-9);
        for r in &search.records {
            assert_eq!(recompute_index(&h, r, 1e-8), r.index);
            assert!(r.grad_norm <= 1e-8);
        }
    }
}

#[test]
fn minima_records_are_consistent() {
    let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
    let h = HamiltonianSample::sample(&spec, 5, 5, SeedStream::new(30)).unwrap();
    let search = find_local_minima(&h, 40, &DescentOptions::default(), SeedStream::new(31)).unwrap();
    assert!(!search.records.is_empty());
    assert!(search.records.windows(2).all(|w| w[0].energy <= w[1].energy));
    for r in &search.records {
        assert_eq!(recompute_index(&h, r, 1e-8), r.index);
        assert!(r.index <= 8);
        assert!(r.point.norm_error() < 1e-12);
        if let Some(d) = r.duplicate_of {
            assert!(search.records[d].duplicate_of.is_none());
        }
    }
}

#[test]
fn free_energy_estimates() {
    let zero = MixtureSpec::pure(2, 2, 0.0, 0.5);
    let est = estimate_free_energy(&zero, 5, 5, 3, 100, SeedStream::new(1)).unwrap();
    assert_eq!(est.value, 0.0);

    let spec = MixtureSpec::pure(2, 2, 0.1, 0.5).with_fields(0.1, 0.1);
    let limit = limiting_free_energy(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().value;
    let est = estimate_free_energy(&spec, 20, 20, 50, 10_000, SeedStream::new(2)).unwrap();
    assert!(
        (est.value - limit).abs() <= 3.0 * est.stderr + 0.005,
        "estimate {} +- {} vs {limit}",
        est.value,
        est.stderr
    );
}

#[test]
fn ground_state_is_monotone_in_starts() {
    let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
    let few = ground_state_scan(&spec, 6, 6, 8, 5, SeedStream::new(40)).unwrap();
    let many = ground_state_scan(&spec, 6, 6, 8, 10, SeedStream::new(40)).unwrap();
    for (a, b) in many.per_hamiltonian_min.iter().zip(&few.per_hamiltonian_min) {
        assert!(a <= b);
    }
}

#[test]
fn ground_state_concentrates() {
    let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
    let small = ground_state_scan(&spec, 4, 4, 30, 10, SeedStream::new(50)).unwrap();
    let large = ground_state_scan(&spec, 16, 16, 30, 10, SeedStream::new(51)).unwrap();
    assert!(large.std_dev < small.std_dev, "{} vs {}", large.std_dev, small.std_dev);
}

#[test]
fn fischer_majorant_dominates() {
    let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
    let opts = KacRiceOptions {
        n_x: 16,
        n_mc: 200,
        ..Default::default()
    };
    let seed = SeedStream::new(60);
    let full = kac_rice_mc(&spec, 3, 3, -1.0, &opts, seed).unwrap();
    let coupled = kac_rice_mc(&spec, 3, 3, -1.0, &KacRiceOptions { coupled: true, ..opts }, seed).unwrap();
    for (f, c) in full.nodes.iter().zip(&coupled.nodes) {
        assert!(f.mean <= c.mean * (1.0 + 1e-12), "node {}: {} > {}", f.x, f.mean, c.mean);
    }
    assert!(full.estimate <= coupled.estimate);
}

#[test]
fn coupled_count_factorizes() {
    let c = MixtureSpec::pure(2, 2, 1.0, 0.5).constants().unwrap();
    let mut rng = SeedStream::new(61).rng();
    for _ in 0..100 {
        let h = sample_conditional_hessian(&c, 3, 3, -1.2, true, &mut rng).unwrap();
        let e = eigenvalues(&h.assembled).unwrap();
        let (e1, e2) = (eigenvalues(&h.block(1)).unwrap(), eigenvalues(&h.block(2)).unwrap());
        let det: f64 = e.iter().product();
        let prod: f64 = e1.iter().product::<f64>() * e2.iter().product::<f64>();
        assert_relative_eq!(det, prod, max_relative = 1e-10, epsilon = 1e-12);
        assert_eq!(index_of(&e) == 0, index_of(&e1) == 0 && index_of(&e2) == 0);
    }
}

#[test]
fn kac_rice_tail_is_negligible_and_seeded() {
    let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
    let opts = KacRiceOptions {
        n_x: 32,
        n_mc: 100,
        ..Default::default()
    };
    let a = kac_rice_mc(&spec, 4, 4, 0.0, &opts, SeedStream::new(70)).unwrap();
    let b = kac_rice_mc(&spec, 4, 4, 0.0, &opts, SeedStream::new(70)).unwrap();
    assert_eq!(a, b);
    assert!(a.tail_fraction < 1e-6);
    assert_eq!(a.window, (-8.0, 0.0));
}

#[test]
fn overlap_moments_uniform_identity() {
    let zero = MixtureSpec::pure(2, 2, 0.0, 0.5);
    let opts = McmcOptions {
        n_disorder: 4,
        burn_in_blocks: 10,
        blocks: 60,
        moves_per_block: 20,
        initial_scale: 0.5,
    };
    let m = estimate_overlap_moments(&zero, 10, 10, &opts, SeedStream::new(80)).unwrap();
    assert_eq!((m.a0, m.b0), (0.0, 0.0));
    assert!((m.moment1 - 0.1).abs() <= 4.0 * m.stderr1 + 0.01, "{} +- {}", m.moment1, m.stderr1);
}
