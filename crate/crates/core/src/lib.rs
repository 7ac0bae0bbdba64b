//! Collapse-free simulation of chained quantum measurements with an exact
//! statement engine for conditional ("if outcome A, then outcome B") logic.
//!
//! The crate models small experiments in which agents measure two-level
//! registers and each other's memory records without ever collapsing the
//! global wavefunction.  Amplitudes live in the ring Q[sqrt2, sqrt3] so that
//! every interference cancellation is an exact structural event, not a
//! floating-point residue.  A float backend with complex amplitudes mirrors
//! the exact engine for phase experiments and oracle checks.
//!
//! Modules build on each other in order: [`amplitude`] (the number types),
//! [`state`] (sparse multi-register state vectors), [`measure`] (measurement
//! styles and histories), [`logic`] (conditional statements, transitivity,
//! compatibility), and [`scenario`] (the bundled experiment library).

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod amplitude;
pub mod error;
pub mod logic;
pub mod measure;
pub mod scenario;
pub mod state;

pub use amplitude::{Amplitude, FloatAmp, QuadAmp};
pub use error::Error;
