//! The auxiliary source `h(x)` whose far field reproduces a target pattern.
//!
//! `h` is expanded as `h(x) = Σ h_ℓm(r) Y_ℓm(x/|x|)` inside the ball of radius
//! `b` and vanishes outside. Substituting the plane-wave expansion into
//! `A(β) = -(1/4π) ∫ e^{-ikβ·x} h(x) dx` gives, degree by degree,
//!
//! ```text
//! A_ℓm = -(-i)^ℓ sqrt(π/2k) ∫₀ᵇ r^{3/2} J_{ℓ+1/2}(kr) h_ℓm(r) dr .
//! ```
//!
//! With constant radial profiles the integral is `b^{5/2} g_{1,ℓ+1/2}(kb)`,
//! so each coefficient is a single complex multiplication away from the
//! amplitude. The moments decay super-exponentially in `ℓ`; inverting them is
//! where the ill-posedness lives, and [`clip_coeffs`] is the regularizer.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::ballgrid::BallGrid;
use crate::error::{domain, Error, Result};
use crate::specfun::{normalized_legendre_table, radial_bessel_moment_rel, sph_harm_all, tri_index};
use crate::sphergrid::ShCoefficients;

/// Radial dependence of every `h_ℓm(r)` on `[0, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialProfile {
    /// `h_ℓm(r) = h_ℓm` for `r ≤ b`.
    #[default]
    Constant,
}

/// Coefficients of `h` plus the bookkeeping of how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct HExpansion {
    pub coeffs: ShCoefficients,
    pub support_radius: f64,
    pub profile: RadialProfile,
    /// Clipping bound `T`, if clipping was applied.
    pub clip_bound: Option<f64>,
    /// Per coefficient: was its modulus reduced by clipping.
    pub clipped_mask: Vec<bool>,
}

impl HExpansion {
    pub fn new(coeffs: ShCoefficients, support_radius: f64) -> Self {
        let n = coeffs.as_slice().len();
        Self {
            coeffs,
            support_radius,
            profile: RadialProfile::Constant,
            clip_bound: None,
            clipped_mask: alloc::vec![false; n],
        }
    }

    pub fn band(&self) -> usize {
        self.coeffs.band()
    }

    pub fn is_clipped(&self) -> bool {
        self.clip_bound.is_some()
    }

    /// Number of coefficients whose modulus clipping reduced.
    pub fn clipped_count(&self) -> usize {
        self.clipped_mask.iter().filter(|&&c| c).count()
    }

    /// `‖h‖_{L²(D)} = sqrt(b³/3 · Σ |h_ℓm|²)` for constant profiles.
    pub fn l2_norm(&self) -> f64 {
        let b = self.support_radius;
        (b * b * b / 3.0).sqrt() * self.coeffs.norm()
    }

    /// `‖h − other‖_{L²(D)}`.
    pub fn l2_distance(&self, other: &HExpansion) -> f64 {
        let band = self.band().max(other.band());
        let a = self.coeffs.truncated(band);
        let b = other.coeffs.truncated(band);
        let s: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        let r = self.support_radius;
        (r * r * r / 3.0 * s).sqrt()
    }
}

/// Degree factors `M_ℓ` with `A_ℓm = M_ℓ h_ℓm` for constant radial profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub k: f64,
    pub support_radius: f64,
    /// `g_{1,ℓ+1/2}(k b)` for `ℓ = 0..=L`.
    pub moments: Vec<f64>,
    factors: Vec<Complex64>,
}

impl MomentTable {
    pub fn new(band: usize, k: f64, support_radius: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(domain("wavenumber must be positive"));
        }
        if !(support_radius > 0.0) {
            return Err(domain("support radius must be positive"));
        }
        let kb = k * support_radius;
        let lead = (PI / (2.0 * k)).sqrt() * support_radius.powf(2.5);
        let mut moments = Vec::with_capacity(band + 1);
        let mut factors = Vec::with_capacity(band + 1);
        for l in 0..=band {
            let g = radial_bessel_moment_rel(1.0, l as f64 + 0.5, kb, 1e-13)?;
            // -(-i)^l
            let phase = match l % 4 {
                0 => Complex64::new(-1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            moments.push(g);
            factors.push(phase * (lead * g));
        }
        Ok(Self {
            k,
            support_radius,
            moments,
            factors,
        })
    }

    pub fn band(&self) -> usize {
        self.factors.len() - 1
    }

    /// `M_ℓ = -(-i)^ℓ sqrt(π/2k) b^{5/2} g_{1,ℓ+1/2}(kb)`.
    pub fn factor(&self, l: usize) -> Complex64 {
        self.factors[l]
    }
}

/// Invert the degree-wise moment relation: `h_ℓm = f_ℓm / M_ℓ`.
///
/// The phase follows from the moment relation itself, which gives
/// `h_ℓm = -i^ℓ f_ℓm / (sqrt(π/2k) b^{5/2} g_{1,ℓ+1/2}(kb))`.
pub fn solve_h_coeffs(f: &ShCoefficients, k: f64, support_radius: f64) -> Result<HExpansion> {
    let table = MomentTable::new(f.band(), k, support_radius)?;
    solve_h_coeffs_with(f, &table)
}

pub fn solve_h_coeffs_with(f: &ShCoefficients, table: &MomentTable) -> Result<HExpansion> {
    if table.band() < f.band() {
        return Err(domain("moment table band is below the target band"));
    }
    for l in 0..=f.band() {
        if !(table.moments[l].abs() >= 1e-300) {
            return Err(Error::MomentUnderflow {
                degree: l,
                moment: table.moments[l],
            });
        }
    }
    let data = f.iter().map(|(l, _, c)| c / table.factor(l)).collect();
    let coeffs = ShCoefficients::from_vec(f.band(), data)?;
    Ok(HExpansion::new(coeffs, table.support_radius))
}

/// Project every coefficient onto the disc of radius `T`, keeping its phase.
pub fn clip_coeffs(h: &HExpansion, bound: f64) -> Result<HExpansion> {
    if !(bound > 0.0) {
        return Err(domain("clipping bound must be positive"));
    }
    let mut out = h.clone();
    for (c, flag) in out.coeffs.as_mut_slice().iter_mut().zip(out.clipped_mask.iter_mut()) {
        let m = c.norm();
        if m > bound {
            *c *= bound / m;
            // rounding may leave the modulus a hair above the bound
            if c.norm() > bound {
                *c = Complex64::from_polar(bound, c.arg());
                if c.norm() > bound {
                    *c *= 1.0 - f64::EPSILON;
                }
            }
            *flag = true;
        }
    }
    out.clip_bound = Some(match h.clip_bound {
        Some(t) => t.min(bound),
        None => bound,
    });
    Ok(out)
}

/// `h(x)`; zero outside the support ball, only the `ℓ = 0` term at the origin.
pub fn evaluate_h(h: &HExpansion, x: [f64; 3]) -> Complex64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r > h.support_radius {
        return Complex64::new(0.0, 0.0);
    }
    if r == 0.0 {
        return h.coeffs.get(0, 0) * (1.0 / (4.0 * PI)).sqrt();
    }
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    let y = sph_harm_all(h.band(), theta, phi);
    h.coeffs.as_slice().iter().zip(&y).map(|(c, y)| c * y).sum()
}

/// Coefficients of the amplitude `A(β)` produced by `h`, `A_ℓm = M_ℓ h_ℓm`.
pub fn predicted_amplitude(h: &HExpansion, k: f64) -> Result<ShCoefficients> {
    let table = MomentTable::new(h.band(), k, h.support_radius)?;
    Ok(predicted_amplitude_with(h, &table))
}

pub fn predicted_amplitude_with(h: &HExpansion, table: &MomentTable) -> ShCoefficients {
    let data = h.coeffs.iter().map(|(l, _, c)| c * table.factor(l)).collect();
    ShCoefficients::from_vec(h.band(), data).expect("band preserved")
}

/// Per-degree angular sums `S_ℓ(θ, φ) = Σ_m h_ℓm Y_ℓm(θ, φ)` on the angular
/// nodes of a ball grid, indexed `[(it * n_phi + ip) * (L + 1) + ℓ]`.
pub(crate) fn degree_components(coeffs: &ShCoefficients, grid: &BallGrid) -> Vec<Complex64> {
    let band = coeffs.band();
    let (_, n_theta, n_phi) = grid.dims();
    let nl = band + 1;
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); n_theta * n_phi * nl];
    let phases: Vec<Vec<Complex64>> = grid
        .phi()
        .iter()
        .map(|&p| (0..=band).map(|m| Complex64::from_polar(1.0, m as f64 * p)).collect())
        .collect();
    for it in 0..n_theta {
        let table = normalized_legendre_table(band, grid.cos_theta()[it], grid.sin_theta()[it]);
        for (ip, ph) in phases.iter().enumerate() {
            let base = (it * n_phi + ip) * nl;
            for l in 0..=band {
                let mut acc = coeffs.get(l, 0) * table[tri_index(l, 0)];
                for m in 1..=l {
                    let p = table[tri_index(l, m)];
                    let y = ph[m] * p;
                    let yneg = if m % 2 == 0 { y.conj() } else { -y.conj() };
                    acc += coeffs.get(l, m as i64) * y + coeffs.get(l, -(m as i64)) * yneg;
                }
                out[base + l] = acc;
            }
        }
    }
    out
}

/// `h` at every node of `grid`.
pub fn evaluate_on_grid(h: &HExpansion, grid: &BallGrid) -> Vec<Complex64> {
    let comps = degree_components(&h.coeffs, grid);
    let nl = h.band() + 1;
    let n_ang = grid.len() / grid.radii().len();
    (0..grid.len())
        .map(|i| {
            let (r, _, _) = grid.spherical(i);
            if r > h.support_radius {
                return Complex64::new(0.0, 0.0);
            }
            let a = i % n_ang;
            comps[a * nl..(a + 1) * nl].iter().sum()
        })
        .collect()
}
