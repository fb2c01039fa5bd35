use nalgebra::DVector;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{HamiltonianSample, PartialForm};
use super::sphere::{gaussian_vector, project_to_sphere, tangent_projection, SpherePoint};
use crate::error::{Error, Result};
use crate::free_energy::{crisanti_sommers_endpoint, solve_fixed_point, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::mixture::MixtureSpec;
use crate::numerics::RunningStats;
use crate::rng::{Rng, SeedStream};

const TARGET_ACCEPTANCE: f64 = 0.4;
const SCALE_RANGE: (f64, f64) = (1e-3, 5.0);
/// Acceptance rates outside this band raise a [`MixingWarning`].
pub const HEALTHY_ACCEPTANCE: (f64, f64) = (0.1, 0.7);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    pub n_disorder: usize,
    /// Tuning blocks, discarded.
    pub burn_in_blocks: usize,
    pub blocks: usize,
    /// Single-party moves per replica in each half-block.
    pub moves_per_block: usize,
    pub initial_scale: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions {
            n_disorder: 8,
            burn_in_blocks: 50,
            blocks: 200,
            moves_per_block: 50,
            initial_scale: 0.5,
        }
    }
}

/// The sampler's acceptance rate for one party left the healthy band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingWarning {
    pub party: u8,
    pub acceptance: f64,
}

impl std::fmt::Display for MixingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "party {} acceptance {:.3} outside [{}, {}]",
            self.party, self.acceptance, HEALTHY_ACCEPTANCE.0, HEALTHY_ACCEPTANCE.1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMoments {
    pub a0: f64,
    pub b0: f64,
    /// `E <(R^1_{12} - a0)^2>` and its standard error across disorder samples.
    pub moment1: f64,
    pub stderr1: f64,
    pub moment2: f64,
    pub stderr2: f64,
    /// Mean production-phase acceptance per party.
    pub acceptance: [f64; 2],
    /// Tuned proposal scales per party, averaged over disorder samples.
    pub scales: [f64; 2],
    pub warnings: Vec<MixingWarning>,
}

/// High-temperature overlaps `(a0, b0)`; an all-zero mixture decouples into
/// two one-party problems.
fn reference_overlaps(spec: &MixtureSpec) -> Result<(f64, f64)> {
    if spec.active_terms().next().is_none() {
        let (_, a0) = crisanti_sommers_endpoint(spec.h1, 0.0)?;
        let (_, b0) = crisanti_sommers_endpoint(spec.h2, 0.0)?;
        return Ok((a0, b0));
    }
    let fp = solve_fixed_point(spec, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok((fp.a0, fp.b0))
}

/// Random-walk Metropolis move on one sphere: tangent Gaussian step of
/// relative size `scale`, then reprojection. The proposal density depends
/// only on the angle between old and new point, so it is symmetric.
fn metropolis_move(form: &PartialForm, x: &mut DVector<f64>, current: &mut f64, scale: f64, rng: &mut Rng) -> bool {
    let z = tangent_projection(x, &gaussian_vector(x.len(), rng));
    let mut y = &*x + z * scale;
    project_to_sphere(&mut y);
    let proposed = form.value(&y);
    let log_ratio = proposed - *current;
    if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
        *x = y;
        *current = proposed;
        true
    } else {
        false
    }
}

struct DisorderRun {
    moment: [f64; 2],
    acceptance: [f64; 2],
    scale: [f64; 2],
}

fn run_disorder(spec: &MixtureSpec, n1: usize, n2: usize, opts: &McmcOptions, refs: [f64; 2], seed: SeedStream) -> Result<DisorderRun> {
    let h = HamiltonianSample::sample(spec, n1, n2, seed.named("disorder"))?;
    let mut rng = seed.named("chain").rng();
    let mut replicas = [SpherePoint::uniform(n1, n2, &mut rng), SpherePoint::uniform(n1, n2, &mut rng)];
    let mut scale = [opts.initial_scale; 2];
    let mut sums = [RunningStats::default(); 2];
    let mut accepted = [0u64; 2];
    let mut proposed = [0u64; 2];
    let norms = [n1 as f64, n2 as f64];

    for block in 0..opts.burn_in_blocks + opts.blocks {
        let production = block >= opts.burn_in_blocks;
        for party in 0..2 {
            let forms: Vec<PartialForm> = replicas
                .iter()
                .map(|r| if party == 0 { h.u_form(&r.v) } else { h.v_form(&r.u) })
                .collect();
            let mut current: Vec<f64> = replicas
                .iter()
                .zip(&forms)
                .map(|(r, f)| f.value(if party == 0 { &r.u } else { &r.v }))
                .collect();
            let mut block_accepted = 0u64;
            for _ in 0..opts.moves_per_block {
                for (k, r) in replicas.iter_mut().enumerate() {
                    let x = if party == 0 { &mut r.u } else { &mut r.v };
                    if metropolis_move(&forms[k], x, &mut current[k], scale[party], &mut rng) {
                        block_accepted += 1;
                    }
                }
                if production {
                    let overlap = if party == 0 {
                        replicas[0].u.dot(&replicas[1].u)
                    } else {
                        replicas[0].v.dot(&replicas[1].v)
                    } / norms[party];
                    let d = overlap - refs[party];
                    sums[party].push(d * d);
                }
            }
            let rate = block_accepted as f64 / (2 * opts.moves_per_block) as f64;
            if production {
                accepted[party] += block_accepted;
                proposed[party] += 2 * opts.moves_per_block as u64;
            } else {
                scale[party] = (scale[party] * (rate - TARGET_ACCEPTANCE).exp()).clamp(SCALE_RANGE.0, SCALE_RANGE.1);
            }
        }
    }
    let acc = |k: usize| if proposed[k] == 0 { f64::NAN } else { accepted[k] as f64 / proposed[k] as f64 };
    Ok(DisorderRun {
        moment: [sums[0].mean(), sums[1].mean()],
        acceptance: [acc(0), acc(1)],
        scale,
    })
}

/// Second moments of the two intra-party overlaps about `(a0, b0)` under
/// the Gibbs measure, averaged over disorder.
///
/// Two independent replicas per disorder sample run Metropolis in lockstep,
/// alternating blocks of `u` moves and `v` moves. Proposal scales are tuned
/// towards 40% acceptance during burn-in only.
pub fn estimate_overlap_moments(
    spec: &MixtureSpec,
    n1: usize,
    n2: usize,
    opts: &McmcOptions,
    seed: SeedStream,
) -> Result<OverlapMoments> {
    if opts.n_disorder == 0 || opts.blocks == 0 || opts.moves_per_block == 0 {
        return Err(Error::InvalidArgument("MCMC needs disorder samples, blocks and moves".into()));
    }
    let (a0, b0) = reference_overlaps(spec)?;
    let runs = (0..opts.n_disorder)
        .into_par_iter()
        .map(|i| run_disorder(spec, n1, n2, opts, [a0, b0], seed.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let stat = |f: &dyn Fn(&DisorderRun) -> f64| runs.iter().map(f).collect::<RunningStats>();
    let m1 = stat(&|r| r.moment[0]);
    let m2 = stat(&|r| r.moment[1]);
    let acceptance = [stat(&|r| r.acceptance[0]).mean(), stat(&|r| r.acceptance[1]).mean()];
    let scales = [stat(&|r| r.scale[0]).mean(), stat(&|r| r.scale[1]).mean()];
    let warnings = acceptance
        .iter()
        .enumerate()
        .filter(|(_, &a)| !(HEALTHY_ACCEPTANCE.0..=HEALTHY_ACCEPTANCE.1).contains(&a))
        .map(|(k, &a)| MixingWarning {
            party: k as u8 + 1,
            acceptance: a,
        })
        .collect();
    Ok(OverlapMoments {
        a0,
        b0,
        moment1: m1.mean(),
        stderr1: m1.stderr(),
        moment2: m2.mean(),
        stderr2: m2.stderr(),
        acceptance,
        scales,
        warnings,
    })
}
