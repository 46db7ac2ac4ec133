//! Exact desk-scale simulation of quantum phase estimation.
//!
//! The crate computes the full register outcome distribution of phase
//! estimation for three kinds of perturbation: inputs that are only close to
//! an eigenvector, unitaries replaced by Trotter products, and unitaries
//! replaced by QDRIFT random products. Every probability is computed exactly
//! from the simulated amplitudes, so the accompanying error bounds can be
//! checked deterministically (or, for QDRIFT, over seeded realizations).
//!
//! - [`hamiltonian`]: term models, spectra, residuals, phase distances.
//! - [`propagators`]: exact powers, Trotter and QDRIFT steps, error norms.
//! - [`qpe`]: outcome distributions, failure probabilities, shot sampling.
//! - [`bounds`]: the closed-form qubit counts and probability bounds.
//! - [`harness`]: declarative experiments with CSV/JSON/SVG output.

pub mod bounds;
pub mod error;
pub mod format;
pub mod hamiltonian;
pub mod harness;
pub mod linalg;
pub mod propagators;
pub mod qpe;
pub mod rng;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
