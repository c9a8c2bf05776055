//! Two qubits coupled through the chiral edge states of a quarter-flux
//! Hofstadter lattice, in the single-excitation sector.

pub mod asym;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod npsolver;
pub mod perturb;
pub mod roots;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
