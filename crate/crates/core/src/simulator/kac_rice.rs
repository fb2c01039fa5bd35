use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mixture::{MixtureConstants, MixtureSpec};
use crate::numerics::{gauss_legendre, ln_gamma, RunningStats};
use crate::random_matrix::{eigenvalues, index_of, sample_conditional_hessian};
use crate::rng::SeedStream;

/// Largest `N1 + N2` accepted by the determinant Monte Carlo.
pub const KAC_RICE_MAX_N: usize = 24;

/// `log V_N` with `V_N = 2 (pi N)^(N/2) / Gamma(N/2)`.
pub fn surface_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::LN_2 + 0.5 * nf * (PI * nf).ln() - ln_gamma(0.5 * nf)
}

/// Log surface area of the sphere of radius `sqrt(n)` in `R^n`, which is
/// `V_n / sqrt(n)`.
pub fn log_sphere_area(n: usize) -> f64 {
    surface_volume(n) - 0.5 * (n as f64).ln()
}

/// Log density at zero of the tangent gradient at a fixed point.
///
/// The `N_i - 1` coordinates of party `i` are independent with variance
/// `N xi_i' / N_i`.
pub fn log_gradient_density(c: &MixtureConstants, n1: usize, n2: usize) -> f64 {
    let n = (n1 + n2) as f64;
    let party = |ni: usize, xp: f64| (ni as f64 - 1.0) * (2.0 * PI * n * xp / ni as f64).ln();
    -0.5 * (party(n1, c.xi1p) + party(n2, c.xi2p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacRiceOptions {
    /// Gauss-Legendre nodes in the energy integral.
    pub n_x: usize,
    /// Conditional Hessian samples per node.
    pub n_mc: usize,
    /// Restrict to critical points of this index; `None` counts all.
    pub index: Option<usize>,
    /// Drop the off-diagonal block (the coupled Hamiltonian).
    pub coupled: bool,
}

impl Default for KacRiceOptions {
    fn default() -> Self {
        KacRiceOptions {
            n_x: 48,
            n_mc: 2000,
            index: Some(0),
            coupled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacRiceNode {
    pub x: f64,
    pub weight: f64,
    /// Mean of `|det| 1{index}` given `H = N x`.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacRiceEstimate {
    /// Expected number of critical points with `H <= N t`.
    pub estimate: f64,
    pub log_estimate: f64,
    pub stderr: f64,
    pub nodes: Vec<KacRiceNode>,
    /// Log of the area, gradient-density and energy-density factors.
    pub log_prefactor: f64,
    /// Integration window in `x = H / N`.
    pub window: (f64, f64),
    /// Share of the estimate carried by the lowest node.
    pub tail_fraction: f64,
}

/// Monte Carlo evaluation of the Kac-Rice integral for the number of
/// critical points with `H <= N t`.
///
/// The count is the product of the two sphere areas, the gradient density
/// at zero and the integral over `x <= t` of the energy density times the
/// conditional mean of `|det Hess| 1{index}` at the double north pole. The
/// integral runs over `[min(t, 0) - 8, t]`, with `t` capped at 8, so
/// `t = +inf` integrates over `[-8, 8]`.
pub fn kac_rice_mc(
    spec: &MixtureSpec,
    n1: usize,
    n2: usize,
    t: f64,
    opts: &KacRiceOptions,
    seed: SeedStream,
) -> Result<KacRiceEstimate> {
    if spec.h1 != 0.0 || spec.h2 != 0.0 {
        return Err(Error::NonzeroField);
    }
    let c = spec.constants()?;
    if n1 < 2 || n2 < 2 || n1 + n2 > KAC_RICE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "need N1, N2 >= 2 and N1 + N2 <= {KAC_RICE_MAX_N}, got ({n1}, {n2})"
        )));
    }
    if opts.n_x == 0 || opts.n_mc < 2 {
        return Err(Error::InvalidArgument("need n_x >= 1 and n_mc >= 2".into()));
    }
    if t.is_nan() {
        return Err(Error::InvalidArgument("level t is NaN".into()));
    }
    let n = (n1 + n2) as f64;
    let hi = t.min(8.0);
    let lo = hi.min(0.0) - 8.0;
    let log_prefactor = log_sphere_area(n1) + log_sphere_area(n2) + log_gradient_density(&c, n1, n2)
        + 0.5 * (n / (2.0 * PI)).ln();

    let nodes = gauss_legendre(opts.n_x, lo, hi)
        .into_par_iter()
        .enumerate()
        .map(|(k, (x, w))| {
            let mut rng = seed.child(k as u64).rng();
            let mut stats = RunningStats::default();
            for _ in 0..opts.n_mc {
                let h = sample_conditional_hessian(&c, n1, n2, x, opts.coupled, &mut rng)?;
                let eig = eigenvalues(&h.assembled)?;
                let hit = opts.index.map_or(true, |i| index_of(&eig) == i);
                stats.push(if hit { eig.iter().map(|l| l.abs()).product() } else { 0.0 });
            }
            let damp = (-0.5 * n * x * x).exp();
            Ok(KacRiceNode {
                x,
                weight: w * damp,
                mean: stats.mean(),
                stderr: stats.stderr(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = log_prefactor.exp();
    let total: f64 = nodes.iter().map(|nd| nd.weight * nd.mean).sum();
    let var: f64 = nodes.iter().map(|nd| (nd.weight * nd.stderr).powi(2)).sum();
    let tail_fraction = if total > 0.0 { nodes[0].weight * nodes[0].mean / total } else { 0.0 };
    Ok(KacRiceEstimate {
        estimate: scale * total,
        log_estimate: log_prefactor + total.ln(),
        stderr: scale * var.sqrt(),
        nodes,
        log_prefactor,
        window: (lo, hi),
        tail_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn volume_small_cases() {
        assert_relative_eq!(surface_volume(2).exp(), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(surface_volume(1).exp(), 2.0, max_relative = 1e-13);
        // circle of radius sqrt(2)
        assert_relative_eq!(log_sphere_area(2).exp(), 2.0 * PI * 2f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn rejects_fields_and_large_n() {
        let spec = MixtureSpec::pure(2, 2, 1.0, 0.5);
        let opts = KacRiceOptions::default();
        let s = SeedStream::new(0);
        assert_eq!(kac_rice_mc(&spec.clone().with_fields(0.1, 0.0), 3, 3, 0.0, &opts, s), Err(Error::NonzeroField));
        assert!(kac_rice_mc(&spec, 13, 12, 0.0, &opts, s).is_err());
    }
}
