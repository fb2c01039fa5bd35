use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::monomial::MonomialBasis;
use super::sphere::{tangent_basis, tangent_projection, SpherePoint};
use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::rng::SeedStream;

/// Default cap on `(p + q) log(max(N1, N2))`, i.e. `2^27` tensor entries.
pub const DEFAULT_LOG_BUDGET: f64 = 27.0 * LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    /// The bipartite model, covariance `N xi(R1, R2)`.
    Bipartite,
    /// Two independent one-party models with covariances `N1 xi^1(R1)` and `N2 xi^2(R2)`.
    Coupled,
}

/// One homogeneous term `sum_{k,l} d[k,l] u^k v^l` over monomials of degrees `(p, q)`.
///
/// Summing the i.i.d. tensor entries that multiply the same monomial pair
/// gives independent Gaussians with variance `sigma^2 * mult(k) * mult(l)`,
/// so this is the tensor model in law.
#[derive(Debug, Clone)]
pub struct Term {
    pub p: u32,
    pub q: u32,
    /// Standard deviation of a single tensor entry.
    pub sigma: f64,
    pub basis_u: Arc<MonomialBasis>,
    pub basis_v: Arc<MonomialBasis>,
    pub d: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HamiltonianSample {
    pub spec: MixtureSpec,
    pub n1: usize,
    pub n2: usize,
    pub kind: HamiltonianKind,
    pub terms: Vec<Term>,
    pub seed: SeedStream,
}

/// Value, Riemannian gradient and (optionally) tangent-space Hessian at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    /// Riemannian gradient in ambient coordinates.
    pub grad_u: DVector<f64>,
    pub grad_v: DVector<f64>,
    /// `(N1 + N2 - 2)`-square Hessian in the basis of [`tangent_basis`].
    pub hessian: Option<DMatrix<f64>>,
}

impl Evaluation {
    pub fn grad_norm(&self) -> f64 {
        (self.grad_u.norm_squared() + self.grad_v.norm_squared()).sqrt()
    }
}

/// `u -> value` for fixed `v`, used by single-party Metropolis moves.
#[derive(Debug, Clone)]
pub struct PartialForm {
    parts: Vec<(Arc<MonomialBasis>, DVector<f64>)>,
    field: f64,
    constant: f64,
}

impl PartialForm {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let s = x.as_slice();
        self.parts.iter().map(|(b, w)| b.eval(s).dot(w)).sum::<f64>() + self.field * x.sum() + self.constant
    }
}

struct BasisCache(HashMap<(usize, u32), Arc<MonomialBasis>>);

impl BasisCache {
    fn get(&mut self, n: usize, degree: u32) -> Arc<MonomialBasis> {
        self.0
            .entry((n, degree))
            .or_insert_with(|| Arc::new(MonomialBasis::new(n, degree)))
            .clone()
    }
}

fn sample_term(
    p: u32,
    q: u32,
    sigma: f64,
    cache: &mut BasisCache,
    n1: usize,
    n2: usize,
    seed: SeedStream,
) -> Term {
    let basis_u = cache.get(n1, p);
    let basis_v = cache.get(n2, q);
    let mut rng = seed.rng();
    let (mu, mv) = (basis_u.multiplicities(), basis_v.multiplicities());
    let d = DMatrix::from_fn(basis_u.len(), basis_v.len(), |k, l| {
        let z: f64 = rng.sample(StandardNormal);
        sigma * (mu[k] * mv[l]).sqrt() * z
    });
    Term {
        p,
        q,
        sigma,
        basis_u,
        basis_v,
        d,
    }
}

fn check_sizes(spec: &MixtureSpec, n1: usize, n2: usize, budget: f64) -> Result<()> {
    // An all-zero mixture is a valid (field-only) Hamiltonian here.
    match spec.validate() {
        Ok(_) | Err(Error::EmptyMixture) => {}
        Err(e) => return Err(e),
    }
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidArgument(format!("need N1, N2 >= 2, got ({n1}, {n2})")));
    }
    let (pmax, qmax) = spec
        .active_terms()
        .fold((0u32, 0u32), |acc, c| if c.p + c.q > acc.0 + acc.1 { (c.p, c.q) } else { acc });
    let log_size = (pmax + qmax) as f64 * (n1.max(n2) as f64).ln();
    if log_size > budget {
        return Err(Error::BudgetExceeded { log_size, budget });
    }
    Ok(())
}

impl HamiltonianSample {
    /// Samples the bipartite Hamiltonian with entry variance `beta^2 N / (N1^p N2^q)`.
    pub fn sample(spec: &MixtureSpec, n1: usize, n2: usize, seed: SeedStream) -> Result<Self> {
        Self::sample_with_budget(spec, n1, n2, seed, DEFAULT_LOG_BUDGET)
    }

    pub fn sample_with_budget(spec: &MixtureSpec, n1: usize, n2: usize, seed: SeedStream, budget: f64) -> Result<Self> {
        check_sizes(spec, n1, n2, budget)?;
        let n = (n1 + n2) as f64;
        let mut cache = BasisCache(HashMap::new());
        let terms = spec
            .active_terms()
            .enumerate()
            .map(|(k, c)| {
                let var = c.beta * c.beta * n / ((n1 as f64).powi(c.p as i32) * (n2 as f64).powi(c.q as i32));
                sample_term(c.p, c.q, var.sqrt(), &mut cache, n1, n2, seed.child(k as u64))
            })
            .collect();
        Ok(HamiltonianSample {
            spec: spec.clone(),
            n1,
            n2,
            kind: HamiltonianKind::Bipartite,
            terms,
            seed,
        })
    }

    /// Samples the coupled Hamiltonian `H^1(u) + H^2(v)` built from the two
    /// marginal mixtures `xi^1(x) = xi(x, 1)` and `xi^2(y) = xi(1, y)`.
    pub fn sample_coupled(spec: &MixtureSpec, n1: usize, n2: usize, seed: SeedStream) -> Result<Self> {
        check_sizes(spec, n1, n2, DEFAULT_LOG_BUDGET)?;
        let (m1, m2) = spec.marginals();
        let mut cache = BasisCache(HashMap::new());
        let mut terms = Vec::new();
        for (k, &(p, b2)) in m1.terms.iter().enumerate() {
            let var = b2 * n1 as f64 / (n1 as f64).powi(p as i32);
            terms.push(sample_term(p, 0, var.sqrt(), &mut cache, n1, n2, seed.named("u").child(k as u64)));
        }
        for (k, &(q, b2)) in m2.terms.iter().enumerate() {
            let var = b2 * n2 as f64 / (n2 as f64).powi(q as i32);
            terms.push(sample_term(0, q, var.sqrt(), &mut cache, n1, n2, seed.named("v").child(k as u64)));
        }
        Ok(HamiltonianSample {
            spec: spec.clone(),
            n1,
            n2,
            kind: HamiltonianKind::Coupled,
            terms,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// `|N1 / N - gamma|`.
    pub fn gamma_mismatch(&self) -> f64 {
        (self.n1 as f64 / self.n() as f64 - self.spec.gamma).abs()
    }

    /// Sign flips `(flip_u, flip_v)` that leave the Hamiltonian invariant, identity first.
    pub fn symmetries(&self) -> Vec<(bool, bool)> {
        let (h1, h2) = (self.spec.h1, self.spec.h2);
        let all = |f: &dyn Fn(&Term) -> bool| self.terms.iter().all(f);
        let mut out = vec![(false, false)];
        if h1 == 0.0 && all(&|t| t.p % 2 == 0) {
            out.push((true, false));
        }
        if h2 == 0.0 && all(&|t| t.q % 2 == 0) {
            out.push((false, true));
        }
        if h1 == 0.0 && h2 == 0.0 && all(&|t| (t.p + t.q) % 2 == 0) {
            out.push((true, true));
        }
        out
    }

    pub fn value(&self, pt: &SpherePoint) -> f64 {
        let (u, v) = (pt.u.as_slice(), pt.v.as_slice());
        let mut h = self.spec.h1 * pt.u.sum() + self.spec.h2 * pt.v.sum();
        for t in &self.terms {
            h += t.basis_u.eval(u).dot(&(&t.d * t.basis_v.eval(v)));
        }
        h
    }

    /// Energies on the product grid `us x vs`, entry `(a, b)` at `(us[a], vs[b])`.
    pub fn energy_grid(&self, us: &[DVector<f64>], vs: &[DVector<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(us.len(), vs.len());
        for t in &self.terms {
            let phi_u = monomial_rows(us, &t.basis_u);
            let phi_v = monomial_rows(vs, &t.basis_v);
            out += (phi_u * &t.d) * phi_v.transpose();
        }
        let fu: Vec<f64> = us.iter().map(|u| self.spec.h1 * u.sum()).collect();
        let fv: Vec<f64> = vs.iter().map(|v| self.spec.h2 * v.sum()).collect();
        for b in 0..vs.len() {
            for a in 0..us.len() {
                out[(a, b)] += fu[a] + fv[b];
            }
        }
        out
    }

    /// The energy as a function of `u` with `v` frozen.
    pub fn u_form(&self, v: &DVector<f64>) -> PartialForm {
        let parts = self
            .terms
            .iter()
            .map(|t| (t.basis_u.clone(), &t.d * t.basis_v.eval(v.as_slice())))
            .collect();
        PartialForm {
            parts,
            field: self.spec.h1,
            constant: self.spec.h2 * v.sum(),
        }
    }

    /// The energy as a function of `v` with `u` frozen.
    pub fn v_form(&self, u: &DVector<f64>) -> PartialForm {
        let parts = self
            .terms
            .iter()
            .map(|t| (t.basis_v.clone(), t.d.tr_mul(&t.basis_u.eval(u.as_slice()))))
            .collect();
        PartialForm {
            parts,
            field: self.spec.h2,
            constant: self.spec.h1 * u.sum(),
        }
    }

    /// Value and Euclidean gradient.
    pub fn euclidean_gradient(&self, pt: &SpherePoint) -> (f64, DVector<f64>, DVector<f64>) {
        let (u, v) = (pt.u.as_slice(), pt.v.as_slice());
        let mut value = self.spec.h1 * pt.u.sum() + self.spec.h2 * pt.v.sum();
        let mut gu = DVector::from_element(self.n1, self.spec.h1);
        let mut gv = DVector::from_element(self.n2, self.spec.h2);
        for t in &self.terms {
            let phi_u = t.basis_u.eval(u);
            let phi_v = t.basis_v.eval(v);
            let a = &t.d * &phi_v;
            let b = t.d.tr_mul(&phi_u);
            value += phi_u.dot(&a);
            if t.p > 0 {
                gu += t.basis_u.weighted_gradient(u, &a);
            }
            if t.q > 0 {
                gv += t.basis_v.weighted_gradient(v, &b);
            }
        }
        (value, gu, gv)
    }

    /// Euclidean Hessian blocks `(uu, uv, vv)`.
    pub fn euclidean_hessian(&self, pt: &SpherePoint) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (u, v) = (pt.u.as_slice(), pt.v.as_slice());
        let mut huu = DMatrix::zeros(self.n1, self.n1);
        let mut huv = DMatrix::zeros(self.n1, self.n2);
        let mut hvv = DMatrix::zeros(self.n2, self.n2);
        for t in &self.terms {
            let phi_u = t.basis_u.eval(u);
            let phi_v = t.basis_v.eval(v);
            if t.p >= 2 {
                huu += t.basis_u.weighted_hessian(u, &(&t.d * &phi_v));
            }
            if t.q >= 2 {
                hvv += t.basis_v.weighted_hessian(v, &t.d.tr_mul(&phi_u));
            }
            if t.p >= 1 && t.q >= 1 {
                let ju = t.basis_u.jacobian(u);
                let jv = t.basis_v.jacobian(v);
                huv += ju.tr_mul(&(&t.d * jv));
            }
        }
        (huu, huv, hvv)
    }

    /// Value, Riemannian gradient and optionally the tangent Hessian
    /// `B^T (Euclidean Hessian) B - (<grad, x> / N_i) I` on each block.
    pub fn evaluate(&self, pt: &SpherePoint, with_hessian: bool) -> Evaluation {
        let (value, gu, gv) = self.euclidean_gradient(pt);
        let hessian = with_hessian.then(|| self.tangent_hessian_from(pt, &gu, &gv));
        Evaluation {
            value,
            grad_u: tangent_projection(&pt.u, &gu),
            grad_v: tangent_projection(&pt.v, &gv),
            hessian,
        }
    }

    pub fn tangent_hessian(&self, pt: &SpherePoint) -> DMatrix<f64> {
        let (_, gu, gv) = self.euclidean_gradient(pt);
        self.tangent_hessian_from(pt, &gu, &gv)
    }

    fn tangent_hessian_from(&self, pt: &SpherePoint, gu: &DVector<f64>, gv: &DVector<f64>) -> DMatrix<f64> {
        let (huu, huv, hvv) = self.euclidean_hessian(pt);
        let bu = tangent_basis(&pt.u);
        let bv = tangent_basis(&pt.v);
        let (k1, k2) = (self.n1 - 1, self.n2 - 1);
        let ru = gu.dot(&pt.u) / self.n1 as f64;
        let rv = gv.dot(&pt.v) / self.n2 as f64;
        let mut h = DMatrix::zeros(k1 + k2, k1 + k2);
        let a = bu.tr_mul(&(&huu * &bu)) - DMatrix::identity(k1, k1) * ru;
        let c = bv.tr_mul(&(&hvv * &bv)) - DMatrix::identity(k2, k2) * rv;
        let b = bu.tr_mul(&(&huv * &bv));
        h.view_mut((0, 0), (k1, k1)).copy_from(&a);
        h.view_mut((k1, k1), (k2, k2)).copy_from(&c);
        h.view_mut((0, k1), (k1, k2)).copy_from(&b);
        h.view_mut((k1, 0), (k2, k1)).copy_from(&b.transpose());
        // exact symmetry for the eigensolver
        (&h + h.transpose()) * 0.5
    }

    /// Riemannian gradient in tangent coordinates, length `N1 + N2 - 2`.
    pub fn tangent_gradient(&self, pt: &SpherePoint) -> DVector<f64> {
        let (_, gu, gv) = self.euclidean_gradient(pt);
        let a = tangent_basis(&pt.u).tr_mul(&gu);
        let b = tangent_basis(&pt.v).tr_mul(&gv);
        DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
    }
}

fn monomial_rows(xs: &[DVector<f64>], basis: &MonomialBasis) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(xs.len(), basis.len());
    for (r, x) in xs.iter().enumerate() {
        let phi = basis.eval(x.as_slice());
        for (c, val) in phi.iter().enumerate() {
            m[(r, c)] = *val;
        }
    }
    m
}
