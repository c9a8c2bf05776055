//! Non-perturbative treatment: dressed eigenvalues from the boundary
//! equation `f(lambda) = (lambda - eps) / g^2`, the scaled two-level pair,
//! coupling bounds, qubit weights, and fidelity.

mod boundary;
mod fidelity;
mod ports;
mod scaled;

pub use boundary::{eigenvalues_boundary, BoundaryRoot, BranchFunction, CotBranches, ExactBranches};
pub use fidelity::{
    fidelity_closed_form, fidelity_exact, fidelity_from_roots, fidelity_from_spectrum, qubit_weight,
    two_level_from_spectrum, FidelityResult, SpectrumPair,
};
pub use ports::TwoPort;
pub use scaled::{g_bounds, omega_bounds, scaled_pair, ScaledCoupling, TwoLevelResult};
