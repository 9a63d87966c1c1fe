//! Numerical core for designing a medium, seeded with small acoustically soft
//! particles, that scatters a fixed incident plane wave into a prescribed
//! far-field pattern.
//!
//! The design runs in three stages:
//!
//! 1. expand the target pattern in spherical harmonics and build an auxiliary
//!    source `h(x)` supported in a ball whose far field reproduces it
//!    ([`synthesis`]), optionally clipping its coefficients to regularize the
//!    inversion;
//! 2. turn `h` into a potential `q = h / (u0 - ∫ g h)` ([`potential`]);
//! 3. convert `q` into a particle number density ([`particles`]).
//!
//! [`forward`] closes the loop by solving the Lippmann–Schwinger equation for
//! the designed `q` and measuring the attained scattering amplitude.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// once std is in the crate graph its inherent float methods shadow `Float`
#![cfg_attr(test, allow(unused_imports))]
// `!(x > 0.0)` is the NaN-rejecting form; tabulated constants keep full digits;
// index loops mirror the formulas
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ballgrid;
pub mod design;
mod error;
pub mod forward;
pub mod particles;
pub mod potential;
pub mod specfun;
pub mod sphergrid;
pub mod synthesis;

pub use ballgrid::BallGrid;
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use sphergrid::{ShCoefficients, SphereField, SphereGrid};
pub use synthesis::HExpansion;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
