//! High-temperature free energy.
//!
//! The limit of `F_N = E log Z_N / N` is `min P(a, b)` over `[0,1)^2`, where
//!
//! ```text
//! P(a,b) = gamma/2     (h1^2 (1-a) + a/(1-a) + log(1-a) + xi(1,1) - xi(a,b))
//!        + (1-gamma)/2 (h2^2 (1-b) + b/(1-b) + log(1-b) + xi(1,1) - xi(a,b))
//! ```
//!
//! and the minimizer `(a0, b0)` is the fixed point of
//! `F(a,b) = ((1-a)^2 (h1^2 + d_x xi / gamma), (1-b)^2 (h2^2 + d_y xi / (1-gamma)))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::numerics::nelder_mead_2d;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Upper clamp of the coarse grid used to cross-check the minimizer.
pub const GRID_CLAMP: f64 = 0.95;
const GRID_STEP: f64 = 1e-2;
const GRID_AGREEMENT: f64 = 1e-6;

/// `P`, its gradient and its Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl PEval {
    /// Smallest eigenvalue of the symmetric 2x2 Hessian.
    pub fn hessian_min_eigenvalue(&self) -> f64 {
        let [[a, b], [_, d]] = self.hessian;
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        mean - rad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub a0: f64,
    pub b0: f64,
    pub residual1: f64,
    pub residual2: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyResult {
    pub value: f64,
    pub fixed_point: FixedPoint,
    pub hessian_psd: bool,
    pub grid_min_agrees: bool,
    /// `(a, b, P)` of the refined grid minimum.
    pub grid_min: (f64, f64, f64),
}

fn in_domain(a: f64, b: f64) -> bool {
    (0.0..1.0).contains(&a) && (0.0..1.0).contains(&b)
}

pub fn p_eval(spec: &MixtureSpec, a: f64, b: f64) -> Result<PEval> {
    if !in_domain(a, b) {
        return Err(Error::Domain { a, b });
    }
    Ok(p_eval_unchecked(spec, a, b))
}

fn p_eval_unchecked(spec: &MixtureSpec, a: f64, b: f64) -> PEval {
    let g = spec.gamma;
    let (h1s, h2s) = (spec.h1 * spec.h1, spec.h2 * spec.h2);
    let xi11 = spec.xi(1.0, 1.0);
    let j = spec.xi_jet(a, b);
    let party = |h2: f64, s: f64| h2 * (1.0 - s) + s / (1.0 - s) + (-s).ln_1p() + xi11 - j.value;
    let value = 0.5 * g * party(h1s, a) + 0.5 * (1.0 - g) * party(h2s, b);
    let grad = [
        0.5 * (-g * h1s + g * a / ((1.0 - a) * (1.0 - a)) - j.dx),
        0.5 * (-(1.0 - g) * h2s + (1.0 - g) * b / ((1.0 - b) * (1.0 - b)) - j.dy),
    ];
    let hessian = [
        [0.5 * (g * (1.0 + a) / (1.0 - a).powi(3) - j.dxx), -0.5 * j.dxy],
        [-0.5 * j.dxy, 0.5 * ((1.0 - g) * (1.0 + b) / (1.0 - b).powi(3) - j.dyy)],
    ];
    PEval {
        value,
        grad,
        hessian,
    }
}

/// Absolute residuals of the two critical-point equations
/// `h1^2 + d_x xi / gamma = a / (1-a)^2` and `h2^2 + d_y xi / (1-gamma) = b / (1-b)^2`.
pub fn residuals(spec: &MixtureSpec, a: f64, b: f64) -> (f64, f64) {
    let r = signed_residuals(spec, a, b);
    (r[0].abs(), r[1].abs())
}

fn signed_residuals(spec: &MixtureSpec, a: f64, b: f64) -> [f64; 2] {
    let g = spec.gamma;
    let j = spec.xi_jet(a, b);
    [
        spec.h1 * spec.h1 + j.dx / g - a / ((1.0 - a) * (1.0 - a)),
        spec.h2 * spec.h2 + j.dy / (1.0 - g) - b / ((1.0 - b) * (1.0 - b)),
    ]
}

/// The contraction map `F`.
pub fn fixed_point_map(spec: &MixtureSpec, a: f64, b: f64) -> (f64, f64) {
    let g = spec.gamma;
    let j = spec.xi_jet(a, b);
    (
        (1.0 - a) * (1.0 - a) * (spec.h1 * spec.h1 + j.dx / g),
        (1.0 - b) * (1.0 - b) * (spec.h2 * spec.h2 + j.dy / (1.0 - g)),
    )
}

/// Iterates `F` from `(0, 0)`.
pub fn solve_fixed_point(spec: &MixtureSpec, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    solve_fixed_point_from(spec, (0.0, 0.0), tol, max_iter)
}

/// Iterates `F` from `start` until successive iterates differ by less than
/// `tol`, then polishes with Newton steps on the residual system.
///
/// On failure the best iterate is returned inside [`Error::NotConverged`].
pub fn solve_fixed_point_from(
    spec: &MixtureSpec,
    start: (f64, f64),
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    spec.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !in_domain(start.0, start.1) {
        return Err(Error::Domain {
            a: start.0,
            b: start.1,
        });
    }
    // Iterates are kept strictly inside [0,1) so the residuals stay finite.
    let upper = 1.0 - 1e-12;
    let (mut a, mut b) = start;
    let mut iterations = 0;
    let mut stepped = false;
    while iterations < max_iter {
        iterations += 1;
        let (na, nb) = fixed_point_map(spec, a, b);
        let (na, nb) = (na.clamp(0.0, upper), nb.clamp(0.0, upper));
        let delta = (na - a).abs().max((nb - b).abs());
        a = na;
        b = nb;
        if delta < tol {
            stepped = true;
            break;
        }
    }
    if stepped {
        (a, b) = newton_polish(spec, a, b);
    }
    let (residual1, residual2) = residuals(spec, a, b);
    let converged = stepped && residual1 <= 10.0 * tol && residual2 <= 10.0 * tol;
    let fp = FixedPoint {
        a0: a,
        b0: b,
        residual1,
        residual2,
        iterations,
        converged,
    };
    if converged {
        Ok(fp)
    } else {
        Err(Error::NotConverged(Box::new(fp)))
    }
}

fn newton_polish(spec: &MixtureSpec, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = spec.gamma;
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut r = signed_residuals(spec, a, b);
    for _ in 0..8 {
        let j = spec.xi_jet(a, b);
        // Jacobian of the residual map
        let m11 = j.dxx / g - (1.0 + a) / (1.0 - a).powi(3);
        let m12 = j.dxy / g;
        let m21 = j.dxy / (1.0 - g);
        let m22 = j.dyy / (1.0 - g) - (1.0 + b) / (1.0 - b).powi(3);
        let det = m11 * m22 - m12 * m21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = (m22 * r[0] - m12 * r[1]) / det;
        let db = (m11 * r[1] - m21 * r[0]) / det;
        let (na, nb) = (a - da, b - db);
        if !in_domain(na, nb) {
            break;
        }
        let nr = signed_residuals(spec, na, nb);
        if norm(nr) >= norm(r) {
            break;
        }
        (a, b, r) = (na, nb, nr);
    }
    (a, b)
}

/// Brute-force minimum of `P` on the grid `{0, 0.01, ..., 0.95}^2`, polished by
/// Nelder-Mead. Grid ties go to the lexicographically smallest `(a, b)`.
pub fn grid_minimum(spec: &MixtureSpec) -> (f64, f64, f64) {
    let n = (GRID_CLAMP / GRID_STEP).round() as usize;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=n {
        let a = i as f64 * GRID_STEP;
        for k in 0..=n {
            let b = k as f64 * GRID_STEP;
            let v = p_eval_unchecked(spec, a, b).value;
            if v < best.2 {
                best = (a, b, v);
            }
        }
    }
    let objective = |x: [f64; 2]| {
        if in_domain(x[0], x[1]) && x[0] < 1.0 - 1e-9 && x[1] < 1.0 - 1e-9 {
            p_eval_unchecked(spec, x[0], x[1]).value
        } else {
            f64::INFINITY
        }
    };
    let (x, v, _) = nelder_mead_2d(objective, [best.0, best.1], GRID_STEP, 1e-10, 1e-15, 5_000);
    if v < best.2 {
        (x[0], x[1], v)
    } else {
        best
    }
}

/// Limiting free energy `P(a0, b0)` with the minimizer certificates.
pub fn limiting_free_energy(spec: &MixtureSpec, tol: f64, max_iter: usize) -> Result<FreeEnergyResult> {
    let fixed_point = solve_fixed_point(spec, tol, max_iter)?;
    let at = p_eval_unchecked(spec, fixed_point.a0, fixed_point.b0);
    let grid_min = grid_minimum(spec);
    Ok(FreeEnergyResult {
        value: at.value,
        hessian_psd: at.hessian_min_eigenvalue() >= -1e-12,
        grid_min_agrees: (grid_min.2 - at.value).abs() <= GRID_AGREEMENT,
        grid_min,
        fixed_point,
    })
}

/// One-party Crisanti-Sommers value `1/2 inf_a {h^2(1-a) + a/(1-a) + log(1-a) + (1-a) slope}`
/// and its minimizer.
///
/// The objective is strictly convex, so the minimizer is the unique root of
/// `a / (1-a)^2 = h^2 + slope`.
pub fn crisanti_sommers_endpoint(h: f64, slope: f64) -> Result<(f64, f64)> {
    if !(slope >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need slope >= 0 and finite h, got slope = {slope}, h = {h}"
        )));
    }
    let s = h * h + slope;
    // s a^2 - (2s + 1) a + s = 0, smaller root in rationalized form
    let a = 2.0 * s / (1.0 + 2.0 * s + (1.0 + 4.0 * s).sqrt());
    Ok((0.5 * crisanti_sommers_objective(h, slope, a), a))
}

pub fn crisanti_sommers_objective(h: f64, slope: f64, a: f64) -> f64 {
    h * h * (1.0 - a) + a / (1.0 - a) + (-a).ln_1p() + (1.0 - a) * slope
}

/// Rebuilds `P(a0, b0)` from the two one-party endpoints plus the cross terms.
pub fn recombined_free_energy(spec: &MixtureSpec, fp: &FixedPoint) -> Result<f64> {
    let g = spec.gamma;
    let j = spec.xi_jet(fp.a0, fp.b0);
    let (e1, _) = crisanti_sommers_endpoint(spec.h1, j.dx / g)?;
    let (e2, _) = crisanti_sommers_endpoint(spec.h2, j.dy / (1.0 - g))?;
    let cross = 0.5
        * (spec.xi(1.0, 1.0) - j.value - (1.0 - fp.a0) * j.dx - (1.0 - fp.b0) * j.dy);
    Ok(g * e1 + (1.0 - g) * e2 + cross)
}
