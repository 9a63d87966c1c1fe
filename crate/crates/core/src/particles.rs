//! Particle number density realizing a potential, and the small-particle
//! regime checks.
//!
//! Embedding `N(x)` acoustically soft particles per unit volume, each of
//! capacitance `C`, into a background with potential `q0 = k²(1 - n0)` yields
//! the effective potential `q = q0 + C N`. Inverting gives
//! `N = (q - q0) / C`, which is physical only where that is real and
//! nonnegative; violations are recorded per node rather than hidden.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::potential::PotentialField;

/// Capacitance of one embedded particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceModel {
    /// Capacitance of a soft particle; positive.
    pub c0: f64,
    pub particle_radius: f64,
    /// Surface area `|S|` of one particle.
    pub surface_area: f64,
    /// Boundary impedance; `None` is the soft (Dirichlet) limit.
    pub impedance: Option<Complex64>,
}

impl CapacitanceModel {
    /// Soft spheres of radius `a` with `C0 = 4π a` (the Gaussian-unit
    /// electrostatic capacitance of a sphere). Override `c0` for other
    /// conventions.
    pub fn soft_sphere(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(domain("particle radius must be positive"));
        }
        Ok(Self {
            c0: 4.0 * PI * a,
            particle_radius: a,
            surface_area: 4.0 * PI * a * a,
            impedance: None,
        })
    }

    /// Soft particles with an explicit capacitance.
    pub fn soft(c0: f64, a: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(domain("capacitance must be positive"));
        }
        if !(a > 0.0) {
            return Err(domain("particle radius must be positive"));
        }
        Ok(Self {
            c0,
            particle_radius: a,
            surface_area: 4.0 * PI * a * a,
            impedance: None,
        })
    }

    pub fn with_impedance(mut self, zeta: Complex64, surface_area: f64) -> Self {
        self.impedance = Some(zeta);
        self.surface_area = surface_area;
        self
    }
}

/// `C_ζ = C0 / (1 + C0 / (ζ |S|))`, or `C0` in the soft limit.
pub fn impedance_capacitance(model: &CapacitanceModel) -> Result<Complex64> {
    let c0 = Complex64::new(model.c0, 0.0);
    let Some(zeta) = model.impedance else {
        return Ok(c0);
    };
    if zeta == Complex64::new(0.0, 0.0) {
        return Err(domain("impedance must be nonzero"));
    }
    let denom = Complex64::new(1.0, 0.0) + c0 / (zeta * model.surface_area);
    if denom.norm() <= 1e-15 {
        return Err(Error::SingularImpedance);
    }
    Ok(c0 / denom)
}

/// Thresholds for the small-particle regime; both ratios must stay below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityThresholds {
    pub k0a: f64,
    pub a_over_d: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self {
            k0a: 0.1,
            a_over_d: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// `k · max|n0|`.
    pub k0: f64,
    pub particle_radius: f64,
    /// `(max N)^{-1/3}`; infinite for an empty density.
    pub d_min: f64,
    pub k0a: f64,
    pub a_over_d: f64,
    /// `(a / d_min)³`.
    pub volume_fraction: f64,
    pub thresholds: ValidityThresholds,
    pub pass: bool,
}

/// Nonnegative density on a ball grid plus what had to be quarantined.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleDensityField {
    pub n_values: Vec<f64>,
    /// Nodes where the raw formula gave `N ≤ 0` although `q ≠ q0`.
    pub negative_mask: Vec<bool>,
    /// Raw `Re((q - q0) / C)`, before quarantining.
    pub raw_values: Vec<f64>,
    /// `max |Im((q - q0) / C)|`, the part no real density can realize.
    pub max_imaginary: f64,
    pub validity: Option<ValidityReport>,
}

impl ParticleDensityField {
    pub fn max_density(&self) -> f64 {
        self.n_values.iter().copied().fold(0.0, f64::max)
    }

    pub fn negative_count(&self) -> usize {
        self.negative_mask.iter().filter(|&&b| b).count()
    }
}

/// `N = Re((q - q0) / C)` per node, with nonpositive values set to zero and
/// flagged in the mask.
pub fn density_from_potential(
    q: &PotentialField,
    q0: &[Complex64],
    model: &CapacitanceModel,
) -> Result<ParticleDensityField> {
    if !(model.c0 > 0.0) {
        return Err(domain("capacitance must be positive"));
    }
    if q0.len() != q.q_values.len() {
        return Err(domain("background potential does not match the grid"));
    }
    let cap = impedance_capacitance(model)?;
    let mut n_values = Vec::with_capacity(q0.len());
    let mut raw_values = Vec::with_capacity(q0.len());
    let mut negative_mask = Vec::with_capacity(q0.len());
    let mut max_imaginary: f64 = 0.0;
    for (qi, q0i) in q.q_values.iter().zip(q0) {
        let diff = qi - q0i;
        let n = diff / cap;
        max_imaginary = max_imaginary.max(n.im.abs());
        raw_values.push(n.re);
        let negative = n.re <= 0.0 && diff != Complex64::new(0.0, 0.0);
        negative_mask.push(negative);
        n_values.push(if n.re > 0.0 { n.re } else { 0.0 });
    }
    Ok(ParticleDensityField {
        n_values,
        negative_mask,
        raw_values,
        max_imaginary,
        validity: None,
    })
}

/// `q0 = k² (1 - n0)` for a constant refraction coefficient `n0`.
pub fn background_potential(k: f64, n0: f64, len: usize) -> Vec<Complex64> {
    alloc::vec![Complex64::new(k * k * (1.0 - n0), 0.0); len]
}

/// Small-particle regime diagnostics for a density.
pub fn validity_report(
    density: &ParticleDensityField,
    particle_radius: f64,
    k: f64,
    n0_max: f64,
    thresholds: ValidityThresholds,
) -> Result<ValidityReport> {
    if !(particle_radius > 0.0) {
        return Err(domain("particle radius must be positive"));
    }
    let a = particle_radius;
    let k0 = k * n0_max.abs();
    let k0a = k0 * a;
    let max_n = density.max_density();
    let (d_min, a_over_d) = if max_n > 0.0 {
        (1.0 / max_n.cbrt(), a * max_n.cbrt())
    } else {
        (f64::INFINITY, 0.0)
    };
    let pass = k0a < thresholds.k0a && a_over_d < thresholds.a_over_d;
    Ok(ValidityReport {
        k0,
        particle_radius: a,
        d_min,
        k0a,
        a_over_d,
        volume_fraction: a_over_d * a_over_d * a_over_d,
        thresholds,
        pass,
    })
}
