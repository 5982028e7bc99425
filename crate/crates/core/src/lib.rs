//! Compressed-sensing toolkit for frequency agile radar.
//!
//! A frequency agile radar hops its carrier pulse to pulse. After collecting
//! `N` slow-time samples from one coarse range cell, the joint high-resolution
//! range / Doppler estimation problem is the under-determined linear model
//! `y = Φ x + w`, where `Φ` is an `N × NM` random matrix whose randomness
//! comes from the frequency codes.
//!
//! The crate is split into:
//!
//! - [`signal_model`]: radar parameters, frequency codes, scenes, echo synthesis and noise.
//! - [`sensing`]: the sensing matrix, its factors, and the instantaneous-wideband reference matrix.
//! - [`analysis`]: spark diagnostics, mutual coherence, and closed-form recovery bounds.
//! - [`solvers`]: matched filter, OMP, subspace pursuit, basis pursuit, Lasso and an exhaustive ℓ₀ search.
//! - [`harness`]: seeded Monte-Carlo experiments with CSV/JSON output.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod sensing;
pub mod signal_model;
pub mod solvers;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector used throughout the crate.
pub type CVector = nalgebra::DVector<C64>;
