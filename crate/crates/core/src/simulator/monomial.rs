//! Monomials of fixed degree in `n` variables.
//!
//! A symmetric tensor contracted with `x` on all slots is a polynomial in the
//! monomials `x^k`, so a Hamiltonian term is stored as a matrix over pairs of
//! monomials instead of a full tensor.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    degree: u32,
    /// Sparse exponent vector of each monomial: `(variable, power)` pairs.
    exps: Vec<Vec<(usize, u32)>>,
    /// Number of index tuples collapsing onto each monomial, `degree! / prod(power!)`.
    mult: Vec<f64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `C(n + d - 1, d)`, or `None` on overflow.
pub fn basis_size(n: usize, degree: u32) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..degree as u128 {
        acc = acc.checked_mul(n as u128 + i)? / (i + 1);
    }
    usize::try_from(acc).ok()
}

impl MonomialBasis {
    pub fn new(n: usize, degree: u32) -> Self {
        let mut exps = Vec::new();
        let mut current = Vec::new();
        enumerate(n, degree, 0, &mut current, &mut exps);
        let mult = exps
            .iter()
            .map(|e| factorial(degree) / e.iter().map(|&(_, k)| factorial(k)).product::<f64>())
            .collect();
        MonomialBasis { n, degree, exps, mult }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.mult
    }

    pub fn exponents(&self, k: usize) -> &[(usize, u32)] {
        &self.exps[k]
    }

    /// Values of every monomial at `x`.
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.exps.iter().map(|e| e.iter().map(|&(i, k)| x[i].powi(k as i32)).product()),
        )
    }

    /// Dense Jacobian, `len x n`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.len(), self.n);
        for (row, e) in self.exps.iter().enumerate() {
            for (a, &(i, k)) in e.iter().enumerate() {
                let mut d = k as f64 * x[i].powi(k as i32 - 1);
                for (b, &(i2, k2)) in e.iter().enumerate() {
                    if b != a {
                        d *= x[i2].powi(k2 as i32);
                    }
                }
                j[(row, i)] = d;
            }
        }
        j
    }

    /// `sum_k w[k] grad(x^k)`.
    pub fn weighted_gradient(&self, x: &[f64], w: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        for (e, &wk) in self.exps.iter().zip(w.iter()) {
            if wk == 0.0 {
                continue;
            }
            for (a, &(i, k)) in e.iter().enumerate() {
                let mut d = k as f64 * x[i].powi(k as i32 - 1);
                for (b, &(i2, k2)) in e.iter().enumerate() {
                    if b != a {
                        d *= x[i2].powi(k2 as i32);
                    }
                }
                g[i] += wk * d;
            }
        }
        g
    }

    /// `sum_k w[k] hess(x^k)`.
    pub fn weighted_hessian(&self, x: &[f64], w: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for (e, &wk) in self.exps.iter().zip(w.iter()) {
            if wk == 0.0 {
                continue;
            }
            for (a, &(i, k)) in e.iter().enumerate() {
                // diagonal term d^2/dx_i^2
                if k >= 2 {
                    let mut d = (k * (k - 1)) as f64 * x[i].powi(k as i32 - 2);
                    for (b, &(i2, k2)) in e.iter().enumerate() {
                        if b != a {
                            d *= x[i2].powi(k2 as i32);
                        }
                    }
                    h[(i, i)] += wk * d;
                }
                for (b, &(j, l)) in e.iter().enumerate().skip(a + 1) {
                    let mut d = k as f64 * x[i].powi(k as i32 - 1) * l as f64 * x[j].powi(l as i32 - 1);
                    for (c, &(i2, k2)) in e.iter().enumerate() {
                        if c != a && c != b {
                            d *= x[i2].powi(k2 as i32);
                        }
                    }
                    h[(i, j)] += wk * d;
                    h[(j, i)] += wk * d;
                }
            }
        }
        h
    }
}

fn enumerate(n: usize, left: u32, start: usize, current: &mut Vec<(usize, u32)>, out: &mut Vec<Vec<(usize, u32)>>) {
    if left == 0 {
        out.push(current.clone());
        return;
    }
    for i in start..n {
        for k in (1..=left).rev() {
            current.push((i, k));
            enumerate(n, left - k, i + 1, current, out);
            current.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sizes_match_binomials() {
        for (n, d) in [(1, 3), (4, 0), (5, 1), (6, 2), (4, 3)] {
            let b = MonomialBasis::new(n, d);
            assert_eq!(Some(b.len()), basis_size(n, d));
        }
        assert_eq!(basis_size(6, 2), Some(21));
    }

    #[test]
    fn multiplicities_count_tuples() {
        let b = MonomialBasis::new(3, 3);
        let total: f64 = b.multiplicities().iter().sum();
        assert_eq!(total, 27.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = MonomialBasis::new(3, 3);
        let x = [0.3, -1.2, 0.7];
        let w = DVector::from_fn(b.len(), |k, _| (k as f64 * 0.37).sin());
        let f = |x: &[f64]| b.eval(x).dot(&w);
        let g = b.weighted_gradient(&x, &w);
        let h = b.weighted_hessian(&x, &w);
        let jac_g = b.jacobian(&x).transpose() * &w;
        let eps = 1e-5;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            assert_abs_diff_eq!(g[i], (f(&xp) - f(&xm)) / (2.0 * eps), epsilon = 1e-8);
            assert_abs_diff_eq!(g[i], jac_g[i], epsilon = 1e-12);
            let gp = b.weighted_gradient(&xp, &w);
            let gm = b.weighted_gradient(&xm, &w);
            for j in 0..3 {
                assert_abs_diff_eq!(h[(j, i)], (gp[j] - gm[j]) / (2.0 * eps), epsilon = 1e-7);
            }
        }
    }
}
