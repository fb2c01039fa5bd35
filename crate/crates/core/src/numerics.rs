//! Small numerical kernels shared by the solvers: 1-D maximization over
//! extended reals, bracketing root search, Gauss-Legendre quadrature and a
//! Nelder-Mead polish.

use std::f64::consts::PI;

/// Result of a bounded 1-D maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Max1d {
    pub argmax: f64,
    pub value: f64,
    /// True when the maximizer sits on (or within tolerance of) the lower bound.
    pub at_lower: bool,
    pub at_upper: bool,
}

impl Max1d {
    pub fn empty() -> Self {
        Max1d {
            argmax: f64::NAN,
            value: f64::NEG_INFINITY,
            at_lower: false,
            at_upper: false,
        }
    }
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// `f` may return `-inf`; ties are broken towards the lower end. Exact for
/// unimodal `f`; otherwise returns a local maximum inside the bracket.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Max1d {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if !(hi >= lo) {
        return Max1d::empty();
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // The endpoints are candidates too: the maximum of a monotone function sits there.
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Max1d {
        argmax: best.0,
        value: best.1,
        at_lower: (best.0 - lo).abs() <= tol,
        at_upper: (hi - best.0).abs() <= tol,
    }
}

/// Uniform scan of `n + 1` points on `[lo, hi]` followed by golden refinement
/// around the best grid point.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Max1d {
    if !(hi >= lo) {
        return Max1d::empty();
    }
    if hi == lo {
        let v = f(lo);
        return Max1d {
            argmax: lo,
            value: v,
            at_lower: true,
            at_upper: true,
        };
    }
    let n = n.max(2);
    let h = (hi - lo) / n as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = if i == n { hi } else { lo + h * i as f64 };
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_v == f64::NEG_INFINITY {
        return Max1d::empty();
    }
    let a = if best_i == 0 { lo } else { lo + h * (best_i - 1) as f64 };
    let b = if best_i + 1 >= n { hi } else { lo + h * (best_i + 1) as f64 };
    let refined = golden_max(&mut f, a, b, tol);
    let grid_x = if best_i == n { hi } else { lo + h * best_i as f64 };
    let (argmax, value) = if refined.value >= best_v {
        (refined.argmax, refined.value)
    } else {
        (grid_x, best_v)
    };
    Max1d {
        argmax,
        value,
        at_lower: (argmax - lo).abs() <= tol.max(1e-12),
        at_upper: (hi - argmax).abs() <= tol.max(1e-12),
    }
}

/// Smallest `t` in `[lo, hi]` with `pred(t)` true, assuming `pred(lo)` is false
/// and `pred(hi)` is true; bisection to absolute width `tol`.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut pred: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1, "need at least one node");
    let mut out = Vec::with_capacity(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid - half * x, half * w));
    }
    out.sort_by(|l, r| l.0.total_cmp(&r.0));
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nelder-Mead minimization in two dimensions.
///
/// Returns `(argmin, value, iterations)`; stops when the simplex values span
/// less than `ftol` and its diameter is below `xtol`.
pub fn nelder_mead_2d<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> ([f64; 2], f64, usize) {
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut vals = simplex.map(&mut f);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let diam = simplex
            .iter()
            .skip(1)
            .map(|p| (p[0] - simplex[0][0]).hypot(p[1] - simplex[0][1]))
            .fold(0.0, f64::max);
        if (vals[2] - vals[0]).abs() <= ftol && diam <= xtol {
            break;
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                vals[2] = fe;
            } else {
                simplex[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < vals[2].min(fr) {
                simplex[2] = contracted;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    (simplex[best], vals[best], it)
}

/// `log(Gamma(x))` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Streaming mean and unbiased variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// `log(sum exp(x_i))` without overflow; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let m = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-10);
        assert_abs_diff_eq!(m.argmax, 0.3, epsilon = 1e-8);
        let m = golden_max(|x| x, -1.0, 2.0, 1e-10);
        assert_eq!(m.argmax, 2.0);
        assert!(m.at_upper);
        let m = golden_max(|x| if x > 0.5 { f64::NEG_INFINITY } else { x }, 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(m.argmax, 0.5, epsilon = 1e-10);
        assert!(golden_max(|x| x, 1.0, 0.0, 1e-9).value == f64::NEG_INFINITY);
    }

    #[test]
    fn scan_handles_narrow_feasible_set() {
        let m = scan_then_golden(
            |x| if (0.40..=0.42).contains(&x) { -(x - 0.41).powi(2) } else { f64::NEG_INFINITY },
            0.0,
            1.0,
            200,
            1e-12,
        );
        assert_abs_diff_eq!(m.argmax, 0.41, epsilon = 1e-8);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let nodes = gauss_legendre(5, -1.0, 3.0);
        // exact up to degree 9
        let integral: f64 = nodes.iter().map(|(x, w)| w * x.powi(9)).sum();
        let exact = (3f64.powi(10) - 1.0) / 10.0;
        assert_abs_diff_eq!(integral, exact, epsilon = 1e-8 * exact);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(total, 4.0, epsilon = 1e-13);
        let g: f64 = gauss_legendre(40, -8.0, 8.0)
            .iter()
            .map(|(x, w)| w * (-x * x / 2.0).exp())
            .sum();
        assert_abs_diff_eq!(g, (2.0 * PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn nelder_mead_on_rosenbrock() {
        let (x, v, _) = nelder_mead_2d(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            0.1,
            1e-10,
            1e-16,
            10_000,
        );
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-5);
        assert!(v < 1e-10);
    }

    #[test]
    fn bisection_predicate() {
        let r = bisect_predicate(|t| t * t >= 2.0, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn running_stats_and_lse() {
        let s: RunningStats = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(s.mean(), 2.5);
        assert_abs_diff_eq!(s.variance(), 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
