//! Spherical bipartite spin glasses: replica-symmetric free energy, complexity
//! bounds for local minima, and finite-N Monte Carlo oracles for both.
//!
//! The model lives on `S^{N1} x S^{N2}` (spheres of radius `sqrt(N1)`,
//! `sqrt(N2)`), with a centered Gaussian Hamiltonian whose covariance is
//! `N * xi(R1, R2)` for the polynomial mixture `xi(x, y) = sum beta_{p,q}^2 x^p y^q`.
//!
//! * [`mixture`] defines the model and its derived constants.
//! * [`free_energy`] solves the high-temperature variational problem.
//! * [`complexity`] evaluates the closed-form bounds `K(t)`, `J(t)` and `m0`.
//! * [`random_matrix`] samples the conditional Hessian ensembles.
//! * [`simulator`] is the finite-N ground truth used to cross-check all of the above.

pub mod complexity;
pub mod error;
pub mod free_energy;
pub mod mixture;
pub mod numerics;
pub mod random_matrix;
pub mod rng;
pub mod simulator;

pub use complexity::{ComplexityCurve, CurvePoint};
pub use error::{Error, Result};
pub use free_energy::{FixedPoint, FreeEnergyResult};
pub use mixture::{Coefficient, MixtureConstants, MixtureSpec};
pub use rng::SeedStream;
