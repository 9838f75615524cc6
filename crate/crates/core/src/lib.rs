//! Floquet analysis of the one-dimensional periodic Dirac operator
//! `H₀ = −iσ₂ d/dx + mσ₃ + q(x)` and eigenvalue-exclusion regions for its
//! non-selfadjoint perturbations `H = H₀ + V`.

pub mod asymptotics;
pub mod bands;
pub mod error;
pub mod exclusion;
pub mod floquet;
pub mod mat2;
pub mod output;
pub mod potential;
pub mod propagator;

pub use error::{Error, Result};
pub use mat2::C2Matrix;
pub use potential::{PeriodicPotential, PerturbationField, PotentialShape};
pub use propagator::SpectralPoint;
