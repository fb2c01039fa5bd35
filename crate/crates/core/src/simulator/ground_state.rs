use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianSample;
use super::minima::{find_local_minima, DescentOptions};
use crate::complexity::smallest_zero_m0;
use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::numerics::RunningStats;
use crate::rng::SeedStream;

/// Margins `eps` at which the fraction of ground states below `m0 - eps` is reported.
pub const GROUND_STATE_EPSILONS: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateScan {
    /// Lowest `H / N` found for each Hamiltonian.
    pub per_hamiltonian_min: Vec<f64>,
    /// Smallest zero of `K` at `gamma = N1 / N`.
    pub m0: f64,
    /// `(eps, fraction of Hamiltonians with min H / N < m0 - eps)`.
    pub fractions_below: Vec<(f64, f64)>,
    pub mean: f64,
    pub std_dev: f64,
}

/// Best local minimum of `n_hams` sampled pure Hamiltonians, each from
/// `n_starts` multistart descents, compared with `m0`.
///
/// The starts of a run with more starts extend those of a run with fewer, so
/// the per-Hamiltonian minimum is monotone in `n_starts`.
pub fn ground_state_scan(
    spec: &MixtureSpec,
    n1: usize,
    n2: usize,
    n_hams: usize,
    n_starts: usize,
    seed: SeedStream,
) -> Result<GroundStateScan> {
    let (p, q) = spec
        .pure_degrees()
        .ok_or_else(|| Error::Unsupported("the ground-state scan needs a pure model".into()))?;
    if (spec.xi(1.0, 1.0) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("the ground-state scan needs xi(1,1) = 1".into()));
    }
    if n_hams == 0 || n_starts == 0 {
        return Err(Error::InvalidArgument("need at least one Hamiltonian and one start".into()));
    }
    let n = (n1 + n2) as f64;
    let m0 = smallest_zero_m0(p, q, n1 as f64 / n)?;
    let opts = DescentOptions::default();
    let per_hamiltonian_min = (0..n_hams)
        .into_par_iter()
        .map(|i| {
            let s = seed.child(i as u64);
            let h = HamiltonianSample::sample(spec, n1, n2, s.named("disorder"))?;
            let search = find_local_minima(&h, n_starts, &opts, s.named("starts"))?;
            Ok(search.best_energy() / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let fractions_below = GROUND_STATE_EPSILONS
        .iter()
        .map(|&eps| {
            let below = per_hamiltonian_min.iter().filter(|&&e| e < m0 - eps).count();
            (eps, below as f64 / n_hams as f64)
        })
        .collect();
    let stats: RunningStats = per_hamiltonian_min.iter().copied().collect();
    Ok(GroundStateScan {
        per_hamiltonian_min,
        m0,
        fractions_below,
        mean: stats.mean(),
        std_dev: stats.variance().sqrt(),
    })
}
