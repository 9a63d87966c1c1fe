//! Special functions and quadrature rules shared by every other module.
//!
//! All functions are pure; nothing here holds state.

mod bessel;
mod legendre;
mod quadrature;

pub use bessel::{sph_bessel_j, sph_bessel_j_seq, sph_bessel_y_seq, sph_hankel1, sph_hankel1_seq};
pub use legendre::{assoc_legendre, sph_harm, sph_harm_all};
pub use quadrature::{gauss_legendre, integrate_adaptive, radial_bessel_moment, QuadratureRule1D, ADAPTIVE_BUDGET};

pub(crate) use bessel::{sph_bessel_j_seq_unchecked, sph_hankel1_seq_unchecked};
pub(crate) use legendre::{normalized_legendre_table, tri_index};
pub(crate) use quadrature::radial_bessel_moment_rel;
