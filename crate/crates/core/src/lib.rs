//! Analytic solution of linear stochastic master equations for bosonic modes
//! monitored by dyne (Gaussian-noise) detection.
//!
//! The pipeline runs `system_model` -> `parameterization` -> `lie_rep` ->
//! `trajectory` -> `state_engine` / `povm`, with `adjoint_kalman` and
//! `oracle_sme` as independent cross-checks.

pub mod adjoint_kalman;
pub mod error;
pub mod linalg;
pub mod lie_rep;
pub mod oracle_sme;
pub mod parameterization;
pub mod povm;
pub mod state_engine;
pub mod system_model;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, RMat, RVec};
pub use num_complex::Complex64 as C64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
