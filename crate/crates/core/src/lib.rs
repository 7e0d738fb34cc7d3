//! Path-integral Monte Carlo for the fiber Hamiltonians
//! `H(P) = ½(P − P_f − eA(0))² + H_f` of the Pauli–Fierz model, with an exact
//! truncated Fock-space diagonalization used as the reference.
//!
//! Module map:
//! - [`polarization`]: transverse projectors, polarization frames and their
//!   rotation covariance.
//! - [`field_model`]: form factors, discrete mode sets, the Euclidean pair
//!   kernel `W(τ, x)` and its radial table.
//! - [`paths`]: reproducible Brownian paths on a uniform grid.
//! - [`action`]: discretized double stochastic integrals over a path.
//! - [`estimators`]: Monte Carlo estimators with batch-means errors.
//! - [`fock`]: the truncated Fock-space oracle.

pub mod action;
pub mod error;
pub mod estimators;
pub mod field_model;
pub mod fock;
pub mod paths;
pub mod polarization;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};

/// Version string embedded in every output summary.
pub const VERSION: &str = concat!("fiberpath ", env!("CARGO_PKG_VERSION"));
