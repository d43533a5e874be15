#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

//! Spherical fractional Brownian motion.
//!
//! The field `B` on the unit sphere is the centered Gaussian process with
//! `B(N) = 0` at the North pole and variogram `E[B(x) - B(y)]² = d(x, y)^{2H}`
//! for a Hurst index `0 < H <= 1/2`. This crate computes its angular power
//! spectrum by three routes, synthesizes realizations from a truncated
//! Karhunen-Loève expansion, and measures conditional variances against the
//! strong local nondeterminism lower bound.

pub mod error;
pub mod field;
pub mod harmonics;
pub mod io;
pub mod numerics;
pub mod par;
pub mod slnd;
pub mod spectrum;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
pub use par::Execution;
pub use sphere::SpherePoint;
pub use spectrum::{HurstIndex, PowerSpectrum, SpectrumMethod};
