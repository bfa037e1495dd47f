//! Discrete-mode simulation of two-photon imaging with bucket detection.
//!
//! A source emits one photon into a set of *unprimed* modes and one into a
//! set of *primed* modes. Each photon passes through its own linear object
//! (a unitary transfer matrix, possibly a dilation of a lossy one) and is then
//! detected either mode-resolved (detector array) or jointly over all detected
//! modes (bucket detector).
//!
//! The crate computes every detection statistic of that setup, builds the
//! classically correlated states that reproduce bucket-detected statistics,
//! and ships an independent brute-force oracle plus randomized sweeps that
//! check the equivalences numerically.
//!
//! Module map:
//! - [`states`]: pure and mixed biphoton states, reduced states, separable ensembles
//! - [`objects`]: unitary objects, Haar sampling, lossy dilation, Gram matrices
//! - [`detection`]: propagation and all detection statistics
//! - [`mimicry`]: classical mimic-state constructions
//! - [`verify`]: Kronecker-space oracle, sweeps, and the four-mode demonstration
//! - [`cli`]: scenario files, output formats, and command entry points

pub mod cli;
pub mod detection;
mod error;
pub mod linalg;
pub mod mimicry;
pub mod objects;
pub mod states;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

/// Tolerance for algebraic identities evaluated along a single code path.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Tolerance for cross-path and theorem-level comparisons.
pub const THEOREM_TOL: f64 = 1e-10;
