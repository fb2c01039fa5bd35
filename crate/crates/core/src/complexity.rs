//! Complexity of local minima: the GOE rate function, the upper bound `K`,
//! the lower bound `J` and the ground-state level `m0`.
//!
//! All bounds take values in the extended reals. `-inf` marks thresholds
//! where the variational problem has an empty feasible set and acts as the
//! identity for every `max`/`sup` below.

use std::f64::consts::{LN_2, SQRT_2};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{MixtureConstants, MixtureSpec};
use crate::numerics::{bisect_predicate, golden_max, scan_then_golden, Max1d};

/// Points within this distance above `-sqrt(2)` are treated as sitting on the
/// spectral edge; they only arise from rounding in `(t - gamma x) / (1 - gamma)`.
const EDGE_SNAP: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Strict-feasibility margin below `min(t, a*)` in the lower bound.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Large-deviation rate of the smallest GOE eigenvalue.
///
/// `I(x) = (1/2)(|x| sqrt(x^2-2) + log 2 - 2 log(|x| + sqrt(x^2-2)))` for
/// `x <= -sqrt(2)`, `+inf` otherwise.
pub fn goe_rate(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > -SQRT_2 {
        return f64::INFINITY;
    }
    let z = -x;
    let s = ((z - SQRT_2) * (z + SQRT_2)).max(0.0).sqrt();
    // z s / 2 - log((z + s) / sqrt 2), with the log written to keep accuracy near the edge
    let v = 0.5 * z * s - ((z - SQRT_2 + s) / SQRT_2).ln_1p();
    v.max(0.0)
}

/// The rate function in its literal closed form, without the edge rewriting.
pub fn goe_rate_literal(x: f64) -> f64 {
    if x > -SQRT_2 {
        return f64::INFINITY;
    }
    let z = x.abs();
    let s = (z * z - 2.0).max(0.0).sqrt();
    0.5 * (z * s + LN_2 - 2.0 * (z + s).ln())
}

fn snap_to_edge(x: f64) -> f64 {
    if x > -SQRT_2 && x <= -SQRT_2 + EDGE_SNAP {
        -SQRT_2
    } else {
        x
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::BadGamma(gamma))
    }
}

/// One-party term `(1/2) log(p-1) - (p-2)/(4(p-1)) x^2 - I(x)` of the pure bound.
fn pure_party(p: u32, x: f64) -> f64 {
    let pf = p as f64;
    let rate = goe_rate(x);
    if rate.is_infinite() {
        return f64::NEG_INFINITY;
    }
    0.5 * (pf - 1.0).ln() - (pf - 2.0) / (4.0 * (pf - 1.0)) * x * x - rate
}

/// Maximizer and value of the pure `(p, q)` upper bound `K(t)`.
///
/// The feasible set `{x <= -sqrt 2, u <= -sqrt 2}` with `u = (t - gamma x)/(1 - gamma)`
/// is the interval `[(t + sqrt2 (1-gamma))/gamma, -sqrt 2]`, empty for `t > -sqrt 2`.
/// The objective is concave on it, so golden-section search is exact.
pub fn upsilon0_pure_detail(p: u32, q: u32, gamma: f64, t: f64) -> Result<Max1d> {
    if p == 0 || q == 0 {
        return Err(Error::BadDegree { p, q });
    }
    if p == 1 || q == 1 {
        return Err(Error::DegenerateModel(format!(
            "the pure bound needs p, q >= 2, got ({p},{q})"
        )));
    }
    check_gamma(gamma)?;
    if t.is_nan() {
        return Err(Error::InvalidArgument("threshold t is NaN".into()));
    }
    if t == f64::NEG_INFINITY {
        return Ok(Max1d::empty());
    }
    let hi = -SQRT_2;
    let lo = snap_to_edge((t + SQRT_2 * (1.0 - gamma)) / gamma);
    if lo > hi {
        return Ok(Max1d::empty());
    }
    let objective = |x: f64| {
        let u = snap_to_edge((t - gamma * x) / (1.0 - gamma));
        (1.0 - gamma) * pure_party(q, u) + gamma * pure_party(p, x)
    };
    let tol = 1e-12 * (1.0 + lo.abs());
    Ok(golden_max(objective, lo, hi, tol))
}

/// The pure-model upper bound `K(t)`.
pub fn upsilon0_pure(p: u32, q: u32, gamma: f64, t: f64) -> Result<f64> {
    Ok(upsilon0_pure_detail(p, q, gamma, t)?.value)
}

/// A real function with values in `R ∪ {-inf}` that is `-inf` above `upper`.
#[derive(Clone)]
pub struct Family {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub upper: f64,
}

impl Family {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Family {
            f: Arc::new(f),
            upper: f64::INFINITY,
        }
    }

    /// Declares the function `-inf` on `(upper, inf)`.
    pub fn with_upper(mut self, upper: f64) -> Self {
        self.upper = upper;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x > self.upper {
            f64::NEG_INFINITY
        } else {
            (self.f)(x)
        }
    }
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("upper", &self.upper).finish_non_exhaustive()
    }
}

/// Inputs of the coupled-Hamiltonian combiner `Upsilon_k`.
///
/// `theta[k]` is the one-party complexity of party 2 at index `k`; `lambda[l]`
/// the conditional critical-point exponent of party 1 at index `l`.
#[derive(Debug, Clone)]
pub struct CoupledComplexityInputs {
    pub theta: Vec<Family>,
    pub lambda: Vec<Family>,
    pub gamma: f64,
    /// Search window for `x`.
    pub window: (f64, f64),
    /// Grid points of the coarse scan preceding the golden refinement.
    pub scan_points: usize,
}

impl CoupledComplexityInputs {
    pub fn new(theta: Vec<Family>, lambda: Vec<Family>, gamma: f64) -> Self {
        CoupledComplexityInputs {
            theta,
            lambda,
            gamma,
            window: (-40.0, 40.0),
            scan_points: 4000,
        }
    }
}

/// One branch `sup_x [(1-gamma) Theta_{k-l}((t - gamma x)/(1-gamma)) + gamma (Lambda_l(x) - x^2/2)]`.
pub fn upsilon_branch(inputs: &CoupledComplexityInputs, theta: &Family, lambda: &Family, t: f64) -> Max1d {
    let g = inputs.gamma;
    // x <= lambda.upper, and u <= theta.upper  <=>  x >= (t - (1-g) theta.upper) / g
    let lo = inputs.window.0.max((t - (1.0 - g) * theta.upper) / g);
    let hi = inputs.window.1.min(lambda.upper);
    let lo = if lo > hi && lo - hi <= EDGE_SNAP * (1.0 + hi.abs()) { hi } else { lo };
    if !(lo <= hi) {
        return Max1d::empty();
    }
    let objective = |x: f64| {
        let u = ((t - g * x) / (1.0 - g)).min(theta.upper);
        (1.0 - g) * theta.eval(u) + g * (lambda.eval(x) - 0.5 * x * x)
    };
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    scan_then_golden(objective, lo, hi, inputs.scan_points, tol)
}

/// `Upsilon_k(t) = max_{0 <= l <= k} sup_x [...]`.
pub fn upsilon_k_coupled(inputs: &CoupledComplexityInputs, k: usize, t: f64) -> Result<f64> {
    check_gamma(inputs.gamma)?;
    for index in 0..=k {
        if index >= inputs.theta.len() || index >= inputs.lambda.len() {
            return Err(Error::MissingFamily { index });
        }
    }
    Ok((0..=k)
        .map(|l| upsilon_branch(inputs, &inputs.theta[k - l], &inputs.lambda[l], t).value)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Index-0 families `(Theta_0, Lambda_0)` of the pure `(p, q)` model.
pub fn pure_families(p: u32, q: u32) -> (Family, Family) {
    let theta = Family::new(move |u| pure_party(q, u)).with_upper(-SQRT_2);
    let lambda = Family::new(move |x| pure_party(p, x) + 0.5 * x * x).with_upper(-SQRT_2);
    (theta, lambda)
}

/// Lower end of the `m0` scan.
pub const M0_SCAN_FLOOR: f64 = -50.0;
const M0_SCAN_STEP: f64 = 0.05;

/// Smallest `t` with `K(t) >= 0` for the pure `(p, q)` model, to `1e-10`.
///
/// `K` is nondecreasing and `-inf` above `-sqrt 2`, so the scan walks down from
/// the edge until `K` turns negative and then bisects.
pub fn smallest_zero_m0(p: u32, q: u32, gamma: f64) -> Result<f64> {
    smallest_zero_m0_in(p, q, gamma, M0_SCAN_FLOOR)
}

pub fn smallest_zero_m0_in(p: u32, q: u32, gamma: f64, floor: f64) -> Result<f64> {
    let k = |t: f64| upsilon0_pure(p, q, gamma, t);
    let top = -SQRT_2;
    if k(top)? < 0.0 {
        return Err(Error::NoSignChange { lo: floor, hi: top });
    }
    let mut hi = top;
    loop {
        let lo = hi - M0_SCAN_STEP;
        if lo < floor {
            return Err(Error::NoSignChange { lo: floor, hi: top });
        }
        if k(lo)? < 0.0 {
            // K >= 0 on [hi, top], K < 0 at lo
            let pred = |t: f64| upsilon0_pure(p, q, gamma, t).map(|v| v >= 0.0).unwrap_or(false);
            return Ok(bisect_predicate(pred, lo, hi, 1e-10));
        }
        hi = lo;
    }
}

fn check_normalized(spec: &MixtureSpec) -> Result<()> {
    spec.validate()?;
    let xi11 = spec.xi(1.0, 1.0);
    if (xi11 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidArgument(format!(
            "complexity bounds need xi(1,1) = 1, got {xi11}; normalize the mixture first"
        )));
    }
    if spec.is_bilinear() {
        return Err(Error::DegenerateModel("xi(x, y) = xy is excluded".into()));
    }
    if spec.h1 != 0.0 || spec.h2 != 0.0 {
        return Err(Error::NonzeroField);
    }
    Ok(())
}

/// `a*(a) = -(1 + sqrt(gamma*)) / ((1 - a) min{xi1'/gamma, xi2'/(1-gamma)})`.
pub fn a_star(c: &MixtureConstants, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("weight a = {a} is outside [0, 1]")));
    }
    if a == 1.0 {
        return Err(Error::DivisionByZero("a* at a = 1"));
    }
    let m = (c.xi1p / c.gamma).min(c.xi2p / (1.0 - c.gamma));
    if !(m > 0.0) {
        return Err(Error::DivisionByZero("a* with a vanishing first derivative"));
    }
    Ok(-(1.0 + c.gamma_star.sqrt()) / ((1.0 - a) * m))
}

/// Optimizer record of one `J(t)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JDiagnostics {
    pub a: f64,
    pub x: f64,
    pub y1: f64,
    pub y2: f64,
    /// The maximizing `x` sits on the lower edge of its search window.
    pub x_window_edge: bool,
    /// A maximizing `y_i` sits on the lower edge `-20` of its search window.
    pub y_window_edge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JValue {
    pub value: f64,
    pub diagnostics: Option<JDiagnostics>,
}

/// Search windows and grids of the lower-bound optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JOptions {
    pub x_width: f64,
    pub y_floor: f64,
    pub a_grid: usize,
    pub tol: f64,
}

impl Default for JOptions {
    fn default() -> Self {
        JOptions {
            x_width: 20.0,
            y_floor: -20.0,
            a_grid: 101,
            tol: 1e-10,
        }
    }
}

/// Per-party data of the `J` objective.
#[derive(Debug, Clone, Copy)]
struct Party {
    weight: f64,
    stiffness: f64,
    slope: f64,
}

impl Party {
    fn new(c: &MixtureConstants, i: usize) -> Self {
        let (xp, xpp, alpha) = (c.xi_p(i), c.xi_pp(i), c.alpha(i));
        let weight = c.weight(i);
        Party {
            weight,
            stiffness: xpp / (alpha * alpha),
            slope: xp / (weight * (2.0 * xpp).sqrt()),
        }
    }

    fn term(&self, y: f64, center: f64) -> f64 {
        let d = y - center;
        0.5 * y * y - self.stiffness * d * d - goe_rate(y)
    }
}

/// The lower-bound problem for a fixed normalized mixture.
#[derive(Debug, Clone)]
pub struct LowerBound {
    constants: MixtureConstants,
    parties: [Party; 2],
    offset: f64,
    pub options: JOptions,
}

impl LowerBound {
    pub fn new(spec: &MixtureSpec) -> Result<Self> {
        check_normalized(spec)?;
        let c = spec.constants()?;
        for i in [1, 2] {
            if c.alpha(i) <= 1e-12 {
                return Err(Error::AlphaZero { party: i as u8 });
            }
        }
        let offset = 0.5 * c.gamma * (c.xi1pp / c.xi1p).ln() + 0.5 * (1.0 - c.gamma) * (c.xi2pp / c.xi2p).ln();
        Ok(LowerBound {
            parties: [Party::new(&c, 1), Party::new(&c, 2)],
            constants: c,
            offset,
            options: JOptions::default(),
        })
    }

    pub fn constants(&self) -> &MixtureConstants {
        &self.constants
    }

    /// `sup_{y <= -sqrt 2}` of party `i`'s bracket at fixed `(a, x)`.
    pub fn y_sup(&self, i: usize, a: f64, x: f64) -> Max1d {
        let party = &self.parties[i];
        let center = a * party.slope * x;
        golden_max(|y| party.term(y, center), self.options.y_floor, -SQRT_2, self.options.tol)
    }

    /// The integrand at one point, without the constant offset.
    pub fn bracket(&self, a: f64, x: f64, y1: f64, y2: f64) -> f64 {
        let [p1, p2] = &self.parties;
        -0.5 * x * x + p1.weight * p1.term(y1, a * p1.slope * x) + p2.weight * p2.term(y2, a * p2.slope * x)
    }

    fn x_objective(&self, a: f64, x: f64) -> f64 {
        let s: f64 = (0..2)
            .map(|i| self.parties[i].weight * self.y_sup(i, a, x).value)
            .sum();
        -0.5 * x * x + s
    }

    /// Upper end of the `x` range at weight `a`, or `None` when `a = 1`.
    pub fn x_cap(&self, a: f64, t: f64) -> Option<f64> {
        let a_s = a_star(&self.constants, a).ok()?;
        Some(t.min(a_s) - STRICT_MARGIN)
    }

    /// Inner supremum over `(x, y1, y2)` at fixed `(a, t)`, without the offset.
    pub fn inner_sup(&self, a: f64, t: f64) -> (f64, Option<JDiagnostics>) {
        let Some(hi) = self.x_cap(a, t) else {
            return (f64::NEG_INFINITY, None);
        };
        if !hi.is_finite() {
            return (f64::NEG_INFINITY, None);
        }
        let lo = hi - self.options.x_width;
        let best = golden_max(|x| self.x_objective(a, x), lo, hi, self.options.tol);
        if best.value == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, None);
        }
        let y1 = self.y_sup(0, a, best.argmax);
        let y2 = self.y_sup(1, a, best.argmax);
        let diag = JDiagnostics {
            a,
            x: best.argmax,
            y1: y1.argmax,
            y2: y2.argmax,
            x_window_edge: best.at_lower,
            y_window_edge: y1.at_lower || y2.at_lower,
        };
        (best.value, Some(diag))
    }

    /// `J(t)` with the optimizer record.
    pub fn evaluate(&self, t: f64) -> JValue {
        if t.is_nan() || t == f64::NEG_INFINITY {
            return JValue {
                value: f64::NEG_INFINITY,
                diagnostics: None,
            };
        }
        let n = self.options.a_grid.max(2);
        let h = 1.0 / (n - 1) as f64;
        let grid: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let a = i as f64 * h;
                (a, self.inner_sup(a, t).0)
            })
            .collect();
        let (best_i, &(_, best_v)) = grid
            .iter()
            .enumerate()
            .fold((0, &grid[0]), |acc, cur| if cur.1 .1 > acc.1 .1 { cur } else { acc });
        if best_v == f64::NEG_INFINITY {
            return JValue {
                value: f64::NEG_INFINITY,
                diagnostics: None,
            };
        }
        let lo = if best_i == 0 { 0.0 } else { grid[best_i - 1].0 };
        let hi = if best_i + 1 == n { grid[n - 1].0 } else { grid[best_i + 1].0 };
        // a = 1 makes the feasible set empty, so the refinement stays below it
        let hi = hi.min(1.0 - 1e-12);
        let refined = golden_max(|a| self.inner_sup(a, t).0, lo, hi, 1e-9);
        let a = if refined.value > best_v { refined.argmax } else { grid[best_i].0 };
        let (value, diagnostics) = self.inner_sup(a, t);
        JValue {
            value: value + self.offset,
            diagnostics,
        }
    }
}

/// The lower bound `J(t)` for a normalized mixture with `alpha_1, alpha_2 > 0`.
pub fn j_lower(spec: &MixtureSpec, t: f64) -> Result<f64> {
    Ok(LowerBound::new(spec)?.evaluate(t).value)
}

/// Content of one curve cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Value(f64),
    Unsupported,
    Failed(String),
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub k: Cell,
    pub j: Cell,
    /// Maximizing `x` of the upper bound, when finite.
    pub k_argmax_x: Option<f64>,
    pub j_diagnostics: Option<JDiagnostics>,
}

impl CurvePoint {
    /// Short tags describing edge cases at this threshold.
    pub fn flags(&self) -> Vec<&'static str> {
        let mut flags = Vec::new();
        if self.k.value() == Some(f64::NEG_INFINITY) {
            flags.push("k_empty");
        }
        if self.j.value() == Some(f64::NEG_INFINITY) {
            flags.push("j_empty");
        }
        if matches!(self.k, Cell::Failed(_)) || matches!(self.j, Cell::Failed(_)) {
            flags.push("error");
        }
        if let Some(d) = &self.j_diagnostics {
            if d.x_window_edge {
                flags.push("x_window_edge");
            }
            if d.y_window_edge {
                flags.push("y_window_edge");
            }
        }
        flags
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCurve {
    pub t_grid: Vec<f64>,
    pub points: Vec<CurvePoint>,
    /// Why the upper bound is not computed, when it is not.
    pub k_unsupported: Option<String>,
    pub j_unsupported: Option<String>,
    pub m0: Option<f64>,
}

impl ComplexityCurve {
    pub fn k_values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.k.value()).collect()
    }

    pub fn j_values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.j.value()).collect()
    }

    /// Checks both populated columns are nondecreasing in `t` (up to `tol`)
    /// and that `J <= K` wherever both are finite.
    pub fn check_invariants(&self, tol: f64) -> bool {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.points[a].t.total_cmp(&self.points[b].t));
        let monotone = |vals: Vec<Option<f64>>| {
            order.windows(2).all(|w| match (vals[w[0]], vals[w[1]]) {
                (Some(a), Some(b)) => a <= b + tol || a == f64::NEG_INFINITY,
                _ => true,
            })
        };
        let ordered = self.points.iter().all(|p| match (p.j.value(), p.k.value()) {
            (Some(j), Some(k)) if j.is_finite() && k.is_finite() => j <= k + tol,
            _ => true,
        });
        monotone(self.k_values()) && monotone(self.j_values()) && ordered
    }
}

/// Evaluates the available bounds along `t_grid`.
///
/// `K` needs a pure model, `J` needs `alpha_1, alpha_2 > 0`; a missing bound
/// becomes an `Unsupported` column. Failures at single thresholds are stored
/// in their cell and do not abort the curve.
pub fn curve(spec: &MixtureSpec, t_grid: &[f64]) -> Result<ComplexityCurve> {
    check_normalized(spec)?;
    let c = spec.constants()?;
    let gamma = spec.gamma;
    let k_degrees = match spec.pure_degrees() {
        Some((p, q)) if p >= 2 && q >= 2 => Ok((p, q)),
        Some((p, q)) => Err(format!("pure ({p},{q}) model has a linear party")),
        None => Err("upper bound available for pure models only".to_string()),
    };
    let lower = if c.alpha1 <= 1e-12 || c.alpha2 <= 1e-12 {
        Err("lower bound needs alpha_1, alpha_2 > 0".to_string())
    } else {
        LowerBound::new(spec).map_err(|e| e.to_string())
    };

    let points = t_grid
        .par_iter()
        .map(|&t| {
            let (k, k_argmax_x) = match &k_degrees {
                Ok((p, q)) => match upsilon0_pure_detail(*p, *q, gamma, t) {
                    Ok(m) => (Cell::Value(m.value), m.value.is_finite().then_some(m.argmax)),
                    Err(e) => (Cell::Failed(e.to_string()), None),
                },
                Err(_) => (Cell::Unsupported, None),
            };
            let (j, j_diagnostics) = match &lower {
                Ok(lb) => {
                    let v = lb.evaluate(t);
                    (Cell::Value(v.value), v.diagnostics)
                }
                Err(_) => (Cell::Unsupported, None),
            };
            CurvePoint {
                t,
                k,
                j,
                k_argmax_x,
                j_diagnostics,
            }
        })
        .collect();

    let m0 = match &k_degrees {
        Ok((p, q)) => smallest_zero_m0(*p, *q, gamma).ok(),
        Err(_) => None,
    };
    Ok(ComplexityCurve {
        t_grid: t_grid.to_vec(),
        points,
        k_unsupported: k_degrees.err(),
        j_unsupported: lower.err(),
        m0,
    })
}
