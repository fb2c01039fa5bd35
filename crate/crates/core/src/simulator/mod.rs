//! Finite-N ground truth: sampled Hamiltonians, Monte Carlo estimates of the
//! free energy and overlaps, multistart enumeration of local minima and a
//! Monte Carlo evaluation of the Kac-Rice integral.

mod free_energy_mc;
mod ground_state;
mod hamiltonian;
mod kac_rice;
mod minima;
pub mod monomial;
mod overlaps;
mod sphere;

pub use free_energy_mc::{estimate_free_energy, FreeEnergyEstimate};
pub use ground_state::{ground_state_scan, GroundStateScan, GROUND_STATE_EPSILONS};
pub use hamiltonian::{Evaluation, HamiltonianKind, HamiltonianSample, PartialForm, Term, DEFAULT_LOG_BUDGET};
pub use kac_rice::{
    kac_rice_mc, log_gradient_density, log_sphere_area, surface_volume, KacRiceEstimate, KacRiceNode,
    KacRiceOptions, KAC_RICE_MAX_N,
};
pub use minima::{find_local_minima, recompute_index, CriticalPointRecord, DescentOptions, MinimaSearch, MINIMA_MAX_N};
pub use overlaps::{estimate_overlap_moments, McmcOptions, MixingWarning, OverlapMoments};
pub use sphere::{angle, project_to_sphere, tangent_basis, tangent_projection, uniform_sphere, SpherePoint};
