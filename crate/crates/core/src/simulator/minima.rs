use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianSample;
use super::sphere::{angle, tangent_basis, SpherePoint};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Largest `N1 + N2` accepted by the multistart search (dense Hessians).
pub const MINIMA_MAX_N: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    /// Riemannian gradient norm at which a descent counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Angular distance on each factor below which two points coincide.
    pub dedup_angle: f64,
    /// Relative threshold for counting an eigenvalue as negative.
    pub eig_tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            tol: 1e-8,
            max_iter: 5000,
            dedup_angle: 1e-4,
            eig_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    /// Position in the energy-sorted record list.
    pub id: usize,
    pub point: SpherePoint,
    pub energy: f64,
    pub grad_norm: f64,
    /// Number of negative tangent-Hessian eigenvalues.
    pub index: usize,
    /// `id` of the first record of the same critical point (up to symmetry).
    pub duplicate_of: Option<usize>,
    /// Size of the sign-flip orbit this point represents.
    pub orbit_size: usize,
    /// Start that produced this record.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaSearch {
    pub n: usize,
    pub n_starts: usize,
    /// Starts that did not reach the gradient tolerance.
    pub n_failed: usize,
    /// Converged descents sorted by energy, duplicates included and marked.
    pub records: Vec<CriticalPointRecord>,
}

impl MinimaSearch {
    pub fn distinct(&self) -> impl Iterator<Item = &CriticalPointRecord> {
        self.records.iter().filter(|r| r.duplicate_of.is_none())
    }

    /// Number of distinct critical points with energy `<= n * level`,
    /// counting every symmetry image; `index = None` counts all indices.
    pub fn count_below(&self, level: f64, index: Option<usize>) -> usize {
        let threshold = self.n as f64 * level;
        self.distinct()
            .filter(|r| r.energy <= threshold && index.map_or(true, |k| r.index == k))
            .map(|r| r.orbit_size)
            .sum()
    }

    /// Lowest energy found, `+inf` when nothing converged.
    pub fn best_energy(&self) -> f64 {
        self.records.first().map_or(f64::INFINITY, |r| r.energy)
    }
}

fn retract(pt: &SpherePoint, du: &DVector<f64>, dv: &DVector<f64>) -> SpherePoint {
    let mut out = SpherePoint {
        u: &pt.u + du,
        v: &pt.v + dv,
    };
    out.project();
    out
}

/// Newton step in tangent coordinates; `None` when the Hessian is singular.
fn newton_step(h: &HamiltonianSample, pt: &SpherePoint) -> Option<SpherePoint> {
    let hess = h.tangent_hessian(pt);
    let g = h.tangent_gradient(pt);
    let delta = hess.lu().solve(&(-g))?;
    let k1 = h.n1 - 1;
    let bu = tangent_basis(&pt.u);
    let bv = tangent_basis(&pt.v);
    let du = bu * delta.rows(0, k1);
    let dv = bv * delta.rows(k1, h.n2 - 1);
    Some(retract(pt, &du, &dv))
}

/// Riemannian gradient descent with Barzilai-Borwein steps and Armijo
/// backtracking, switching to Newton steps once the gradient is small.
fn descend(h: &HamiltonianSample, mut pt: SpherePoint, opts: &DescentOptions) -> (SpherePoint, f64, f64, bool) {
    let newton_threshold = 1e-3 * (h.n() as f64).sqrt();
    let mut e = h.evaluate(&pt, false);
    let mut step = 1.0 / h.n() as f64;
    for _ in 0..opts.max_iter {
        let gn = e.grad_norm();
        if gn <= opts.tol {
            return (pt, e.value, gn, true);
        }
        if gn < newton_threshold {
            if let Some(candidate) = newton_step(h, &pt) {
                let ce = h.evaluate(&candidate, false);
                if ce.grad_norm() < 0.5 * gn && ce.value <= e.value + 1e-9 * (1.0 + e.value.abs()) {
                    pt = candidate;
                    e = ce;
                    continue;
                }
            }
        }
        let mut eta = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = retract(&pt, &(-eta * &e.grad_u), &(-eta * &e.grad_v));
            let te = h.evaluate(&trial, false);
            if te.value <= e.value - 1e-4 * eta * gn * gn {
                accepted = Some((trial, te));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, ne)) = accepted else {
            return (pt, e.value, gn, false);
        };
        // Barzilai-Borwein step from the ambient displacement and gradient change
        let su = &next.u - &pt.u;
        let sv = &next.v - &pt.v;
        let yu = &ne.grad_u - &e.grad_u;
        let yv = &ne.grad_v - &e.grad_v;
        let ss = su.norm_squared() + sv.norm_squared();
        let sy = su.dot(&yu) + sv.dot(&yv);
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e3) } else { 2.0 * eta };
        pt = next;
        e = ne;
    }
    let gn = e.grad_norm();
    (pt, e.value, gn, gn <= opts.tol)
}

fn negative_count(hessian: DMatrix<f64>, eig_tol: f64) -> usize {
    let eig = hessian.symmetric_eigenvalues();
    let scale = eig.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    eig.iter().filter(|&&l| l < -eig_tol * scale).count()
}

fn flipped(pt: &SpherePoint, (fu, fv): (bool, bool)) -> SpherePoint {
    SpherePoint {
        u: if fu { -&pt.u } else { pt.u.clone() },
        v: if fv { -&pt.v } else { pt.v.clone() },
    }
}

/// Multistart descent from `n_starts` uniform points, with deduplication up
/// to the sign flips that leave `h` invariant.
pub fn find_local_minima(
    h: &HamiltonianSample,
    n_starts: usize,
    opts: &DescentOptions,
    seed: SeedStream,
) -> Result<MinimaSearch> {
    if h.n() > MINIMA_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "N1 + N2 = {} exceeds the multistart cap {MINIMA_MAX_N}",
            h.n()
        )));
    }
    let outcomes: Vec<_> = (0..n_starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.child(s as u64).rng();
            let start = SpherePoint::uniform(h.n1, h.n2, &mut rng);
            let (pt, energy, grad_norm, converged) = descend(h, start, opts);
            let index = converged.then(|| negative_count(h.tangent_hessian(&pt), opts.eig_tol));
            (pt, energy, grad_norm, index)
        })
        .collect();

    let symmetries = h.symmetries();
    let orbit_size = symmetries.len();
    let mut n_failed = 0;
    // (point, energy, grad_norm, index, start, canonical position)
    let mut found: Vec<(SpherePoint, f64, f64, usize, usize, Option<usize>)> = Vec::new();
    for (start, (pt, energy, grad_norm, index)) in outcomes.into_iter().enumerate() {
        let Some(index) = index else {
            n_failed += 1;
            continue;
        };
        let same = |other: &SpherePoint| {
            symmetries.iter().any(|&g| {
                let img = flipped(&pt, g);
                angle(&img.u, &other.u) < opts.dedup_angle && angle(&img.v, &other.v) < opts.dedup_angle
            })
        };
        let canonical = found.iter().position(|f| f.5.is_none() && same(&f.0));
        found.push((pt, energy, grad_norm, index, start, canonical));
    }

    let mut order: Vec<usize> = (0..found.len()).collect();
    order.sort_by(|&a, &b| found[a].1.total_cmp(&found[b].1).then(found[a].4.cmp(&found[b].4)));
    let mut rank = vec![0; found.len()];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }
    let records = order
        .iter()
        .enumerate()
        .map(|(id, &k)| {
            let (pt, energy, grad_norm, index, start, canonical) = &found[k];
            CriticalPointRecord {
                id,
                point: pt.clone(),
                energy: *energy,
                grad_norm: *grad_norm,
                index: *index,
                duplicate_of: canonical.map(|c| rank[c]),
                orbit_size,
                start: *start,
            }
        })
        .collect();
    Ok(MinimaSearch {
        n: h.n(),
        n_starts,
        n_failed,
        records,
    })
}

/// Index recomputed from a fresh Hessian at a record's point.
pub fn recompute_index(h: &HamiltonianSample, record: &CriticalPointRecord, eig_tol: f64) -> usize {
    negative_count(h.tangent_hessian(&record.point), eig_tol)
}
