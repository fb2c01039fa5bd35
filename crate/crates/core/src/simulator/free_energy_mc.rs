use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianSample;
use super::sphere::uniform_sphere;
use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::numerics::{log_sum_exp, RunningStats};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    /// Mean over disorder of `log(Z_hat) / N`.
    pub value: f64,
    /// Standard error across disorder samples.
    pub stderr: f64,
    pub per_disorder: Vec<f64>,
    /// Sphere points actually used per disorder sample.
    pub n_sphere: usize,
}

/// Plain Monte Carlo estimate of `F_N = E log Z_N / N`.
///
/// For each disorder sample, `Z` is estimated by averaging `exp(H + fields)`
/// over the product grid of `m` uniform `u` points and `m` uniform `v` points,
/// `m = ceil(sqrt(n_sphere))`. Every grid pair is uniform on the product of
/// spheres, so the average is unbiased for `Z`, and the whole grid costs two
/// matrix products.
pub fn estimate_free_energy(
    spec: &MixtureSpec,
    n1: usize,
    n2: usize,
    n_disorder: usize,
    n_sphere: usize,
    seed: SeedStream,
) -> Result<FreeEnergyEstimate> {
    if n_disorder == 0 || n_sphere == 0 {
        return Err(Error::InvalidArgument("need at least one disorder and one sphere sample".into()));
    }
    let m = (n_sphere as f64).sqrt().ceil() as usize;
    let n = (n1 + n2) as f64;
    let log_count = ((m * m) as f64).ln();
    let per_disorder = (0..n_disorder)
        .into_par_iter()
        .map(|i| {
            let s = seed.child(i as u64);
            let h = HamiltonianSample::sample(spec, n1, n2, s.named("disorder"))?;
            let mut rng = s.named("points").rng();
            let us: Vec<DVector<f64>> = (0..m).map(|_| uniform_sphere(n1, &mut rng)).collect();
            let vs: Vec<DVector<f64>> = (0..m).map(|_| uniform_sphere(n2, &mut rng)).collect();
            let grid = h.energy_grid(&us, &vs);
            Ok((log_sum_exp(grid.as_slice()) - log_count) / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let stats: RunningStats = per_disorder.iter().copied().collect();
    Ok(FreeEnergyEstimate {
        value: stats.mean(),
        stderr: stats.stderr(),
        per_disorder,
        n_sphere: m * m,
    })
}
