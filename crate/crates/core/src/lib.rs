//! Analysis engine for downlink cellular coverage under a LoS/NLoS ABG
//! path-loss model: coverage and rate-coverage probability, moments of the
//! conditional success probability, the full SIR meta-distribution, spatial
//! capacity metrics, and parameter optimization over BS height, density and
//! channel partitioning — cross-validated against an internal Monte Carlo
//! Poisson-point-process oracle.
//!
//! The crate is organized around the quantities it computes:
//!
//! * [`propagation`] — ABG path loss and elevation-angle LoS probability.
//! * [`numerics`] — adaptive quadrature, oscillatory integration, maximizers.
//! * [`coverage`] — coverage probability and rate coverage.
//! * [`moments`] — real- and imaginary-order moments, variance.
//! * [`metadist`] — meta-distribution recovery (Gil-Pelaez, Mnatsakanov).
//! * [`capacity`] — spatial coverage/rate capacity and optimization.
//! * [`simulator`] — reproducible Monte Carlo oracle.

// Validations are written as `!(x > 0.0)` so NaN inputs are rejected too;
// the readable forms the lint suggests silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod coverage;
pub mod error;
mod kernel;
pub mod metadist;
pub mod moments;
pub mod numerics;
pub mod propagation;
pub mod simulator;

pub use error::{Error, Result};
