//! Product quadrature filling a ball of radius `b`.
//!
//! Gauss–Legendre in `r` on `[0, b]` (weight `r²` folded in), Gauss–Legendre
//! in `cos θ`, uniform in `φ`. Nodes are ordered radius-major; a *ring* is
//! the set of `n_phi` nodes sharing `(r, θ)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{config, Result};
use crate::specfun::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    radius: f64,
    n_r: usize,
    n_theta: usize,
    n_phi: usize,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    theta_weights: Vec<f64>,
    phi: Vec<f64>,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    cell_radius: Vec<f64>,
}

impl BallGrid {
    pub fn new(radius: f64, n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(config("ball radius must be positive"));
        }
        if n_r == 0 || n_theta == 0 || n_phi == 0 {
            return Err(config("ball grid dimensions must be positive"));
        }
        let rr = gauss_legendre(n_r)?.mapped(0.0, radius);
        let radial_weights: Vec<f64> = rr.nodes.iter().zip(&rr.weights).map(|(r, w)| w * r * r).collect();
        let tr = gauss_legendre(n_theta)?;
        let cos_theta: Vec<f64> = tr.nodes.iter().rev().copied().collect();
        let theta_weights: Vec<f64> = tr.weights.iter().rev().copied().collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let dphi = 2.0 * PI / n_phi as f64;

        let n = n_r * n_theta * n_phi;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut cell_radius = Vec::with_capacity(n);
        for ir in 0..n_r {
            let r = rr.nodes[ir];
            for it in 0..n_theta {
                let w = radial_weights[ir] * theta_weights[it] * dphi;
                let cell = (3.0 * w / (4.0 * PI)).cbrt();
                for &p in &phi {
                    let (sp, cp) = p.sin_cos();
                    points.push([r * sin_theta[it] * cp, r * sin_theta[it] * sp, r * cos_theta[it]]);
                    weights.push(w);
                    cell_radius.push(cell);
                }
            }
        }
        Ok(Self {
            radius,
            n_r,
            n_theta,
            n_phi,
            radii: rr.nodes,
            radial_weights,
            theta,
            cos_theta,
            sin_theta,
            theta_weights,
            phi,
            points,
            weights,
            cell_radius,
        })
    }

    /// Same ball with every dimension doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.radius, 2 * self.n_r, 2 * self.n_theta, 2 * self.n_phi)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_r, self.n_theta, self.n_phi)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_rings(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radius of the ball with the same volume as node `i`'s weight.
    pub fn cell_radius(&self) -> &[f64] {
        &self.cell_radius
    }

    /// `(r, θ, φ)` of node `i`.
    pub fn spherical(&self, i: usize) -> (f64, f64, f64) {
        let ring = i / self.n_phi;
        (
            self.radii[ring / self.n_theta],
            self.theta[ring % self.n_theta],
            self.phi[i % self.n_phi],
        )
    }

    /// `(radial index, polar index, azimuthal index)` of node `i`.
    pub fn indices(&self, i: usize) -> (usize, usize, usize) {
        let ring = i / self.n_phi;
        (ring / self.n_theta, ring % self.n_theta, i % self.n_phi)
    }

    /// `Σ w_i`, equal to `4πb³/3` up to rounding.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫_D |f|² dx` by grid quadrature.
    pub fn norm_sq(&self, values: &[Complex64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| w * v.norm_sqr()).sum()
    }

    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        self.norm_sq(values).sqrt()
    }

    /// Plane wave `e^{ik α·x}` at every node.
    pub fn plane_wave(&self, k: f64, alpha: [f64; 3]) -> Vec<Complex64> {
        self.points
            .iter()
            .map(|x| Complex64::from_polar(1.0, k * (alpha[0] * x[0] + alpha[1] * x[1] + alpha[2] * x[2])))
            .collect()
    }
}
