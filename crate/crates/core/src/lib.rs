//! Gaussian-state simulation of quadratic dissipative master equations:
//! noise evolution, the impurity filter that restores purity at a privileged
//! time, Wehrl-entropy diagnostics, squeezed-state qubits, and a truncated-Fock
//! oracle for cross-checking all of it.

pub mod algebra;
pub mod channels;
pub mod entropy;
pub mod error;
pub mod fockoracle;
pub mod gaussian;
pub mod model;
mod ode;
pub mod qubit;
pub mod wsolve;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
