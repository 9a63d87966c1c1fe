//! Fields on the unit sphere: product quadrature grids, spherical-harmonic
//! analysis and synthesis, and cone-shaped focusing targets.
//!
//! The grid is Gauss–Legendre in `cos θ` times uniform `φ`. With
//! `n_theta > L` and `n_phi > 2L` it integrates products of two band-`L`
//! harmonics exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{config, domain, Result};
use crate::specfun::{gauss_legendre, normalized_legendre_table, tri_index};

/// One quadrature node on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Tensor-product quadrature grid on S².
///
/// Node `i` is ring `i / n_phi`, azimuth `i % n_phi`. An optional rigid
/// rotation maps the grid's own `(θ, φ)` frame to physical directions; analysis
/// and synthesis always work in the grid frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    theta_weights: Vec<f64>,
    phi: Vec<f64>,
    rotation: Option<[[f64; 3]; 3]>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(config("sphere grid needs at least one node in each direction"));
        }
        let rule = gauss_legendre(n_theta)?;
        // descending cos θ gives ascending θ
        let cos_theta: Vec<f64> = rule.nodes.iter().rev().copied().collect();
        let theta_weights: Vec<f64> = rule.weights.iter().rev().copied().collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let sin_theta = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Ok(Self {
            n_theta,
            n_phi,
            theta,
            cos_theta,
            sin_theta,
            theta_weights,
            phi,
            rotation: None,
        })
    }

    /// Default resolution for analysing a band-`L` field.
    pub fn for_band(band: usize) -> Result<Self> {
        Self::new(2 * band + 2, 4 * band + 4)
    }

    /// The same grid rigidly rotated by `rotation` (a proper orthogonal matrix).
    pub fn with_rotation(mut self, rotation: [[f64; 3]; 3]) -> Self {
        self.rotation = Some(rotation);
        self
    }

    pub fn is_rotated(&self) -> bool {
        self.rotation.is_some()
    }

    /// Largest band the grid analyses without aliasing products of two
    /// band-limited fields.
    pub fn max_band(&self) -> usize {
        (self.n_theta - 1).min((self.n_phi - 1) / 2)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn node(&self, i: usize) -> SphereNode {
        let (it, ip) = (i / self.n_phi, i % self.n_phi);
        SphereNode {
            theta: self.theta[it],
            phi: self.phi[ip],
            weight: self.theta_weights[it] * 2.0 * PI / self.n_phi as f64,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = SphereNode> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.theta_weights[i / self.n_phi] * 2.0 * PI / self.n_phi as f64
    }

    /// Physical unit vector of node `i`.
    pub fn direction(&self, i: usize) -> [f64; 3] {
        let (it, ip) = (i / self.n_phi, i % self.n_phi);
        let s = self.sin_theta[it];
        let (sp, cp) = self.phi[ip].sin_cos();
        let v = [s * cp, s * sp, self.cos_theta[it]];
        match &self.rotation {
            None => v,
            Some(m) => [
                m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
                m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
                m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
            ],
        }
    }

    /// `∫ |f|² dβ` by grid quadrature.
    pub fn norm_sq(&self, values: &[Complex64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v.norm_sqr())
            .sum()
    }

    fn check_band(&self, band: usize) -> Result<()> {
        if self.n_theta <= band || self.n_phi <= 2 * band {
            return Err(config(alloc::format!(
                "sphere grid {}x{} cannot resolve band limit {band} (needs n_theta > L and n_phi > 2L)",
                self.n_theta,
                self.n_phi
            )));
        }
        Ok(())
    }
}

/// Complex samples aligned with the nodes of a [`SphereGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereField {
    pub grid: SphereGrid,
    pub values: Vec<Complex64>,
}

impl SphereField {
    pub fn zeros(grid: SphereGrid) -> Self {
        let values = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    /// `‖f‖_{L²(S²)}`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.norm_sq(&self.values).sqrt()
    }
}

/// Spherical-harmonic coefficients `c_ℓm`, `0 ≤ ℓ ≤ L`, `|m| ≤ ℓ`.
///
/// Stored flat at index `ℓ² + ℓ + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoefficients {
    band: usize,
    data: Vec<Complex64>,
}

impl ShCoefficients {
    pub fn zeros(band: usize) -> Self {
        Self {
            band,
            data: alloc::vec![Complex64::new(0.0, 0.0); (band + 1) * (band + 1)],
        }
    }

    pub fn from_vec(band: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != (band + 1) * (band + 1) {
            return Err(domain(alloc::format!(
                "band {band} needs {} coefficients, got {}",
                (band + 1) * (band + 1),
                data.len()
            )));
        }
        Ok(Self { band, data })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    #[inline]
    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    /// Inverse of [`ShCoefficients::index`].
    pub fn degree_order(index: usize) -> (usize, i64) {
        let l = index.isqrt();
        (l, index as i64 - (l * l + l) as i64)
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if l > self.band || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        self.data[Self::index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: Complex64) {
        assert!(
            l <= self.band && m.unsigned_abs() as usize <= l,
            "({l}, {m}) out of range"
        );
        self.data[Self::index(l, m)] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Iterate `(ℓ, m, c_ℓm)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        self.data.iter().enumerate().map(|(i, &c)| {
            let (l, m) = Self::degree_order(i);
            (l, m, c)
        })
    }

    /// Copy truncated (or zero-padded) to band `band`.
    pub fn truncated(&self, band: usize) -> Self {
        let mut out = Self::zeros(band);
        let n = out.data.len().min(self.data.len());
        out.data[..n].copy_from_slice(&self.data[..n]);
        out
    }

    /// `sqrt(Σ |c_ℓm|²)`, the L² norm of the represented field.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            band: self.band,
            data: self.data.iter().map(|&c| c * s).collect(),
        }
    }
}

/// Per-ring normalized Legendre tables for a grid.
fn legendre_rings(grid: &SphereGrid, band: usize) -> Vec<Vec<f64>> {
    (0..grid.n_theta)
        .map(|it| normalized_legendre_table(band, grid.cos_theta[it], grid.sin_theta[it]))
        .collect()
}

/// `c_ℓm = ∫ f conj(Y_ℓm) dβ` by grid quadrature, for `ℓ ≤ band`.
pub fn analyze(field: &SphereField, band: usize) -> Result<ShCoefficients> {
    let grid = &field.grid;
    grid.check_band(band)?;
    if field.values.len() != grid.len() {
        return Err(domain("field length does not match its grid"));
    }
    let n_phi = grid.n_phi;
    let dphi = 2.0 * PI / n_phi as f64;
    let tables = legendre_rings(grid, band);
    let mut out = ShCoefficients::zeros(band);
    let mut fourier = alloc::vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    for it in 0..grid.n_theta {
        let ring = &field.values[it * n_phi..(it + 1) * n_phi];
        // F(m) = Σ_j f_j e^{-imφ_j} Δφ for m = -band..=band
        for (slot, m) in fourier.iter_mut().zip(-(band as i64)..=(band as i64)) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in ring.iter().enumerate() {
                let phase = -(m as f64) * grid.phi[j];
                acc += v * Complex64::from_polar(1.0, phase);
            }
            *slot = acc * dphi;
        }
        let w = grid.theta_weights[it];
        let table = &tables[it];
        for l in 0..=band {
            for m in 0..=l {
                let p = table[tri_index(l, m)] * w;
                let pos = fourier[band + m];
                out.data[ShCoefficients::index(l, m as i64)] += pos * p;
                if m > 0 {
                    let neg = fourier[band - m];
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    out.data[ShCoefficients::index(l, -(m as i64))] += neg * (p * sign);
                }
            }
        }
    }
    Ok(out)
}

/// `f(β) = Σ c_ℓm Y_ℓm(β)` at every node of `grid`.
pub fn synthesize(coeffs: &ShCoefficients, grid: &SphereGrid) -> SphereField {
    let band = coeffs.band;
    let n_phi = grid.n_phi;
    let tables = legendre_rings(grid, band);
    let mut values = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut ring_modes = alloc::vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    for it in 0..grid.n_theta {
        let table = &tables[it];
        // G(m) = Σ_ℓ c_ℓm P̄_ℓ^{|m|} (with the (-1)^m of negative orders)
        for (slot, m) in ring_modes.iter_mut().zip(-(band as i64)..=(band as i64)) {
            let am = m.unsigned_abs() as usize;
            let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
            let mut acc = Complex64::new(0.0, 0.0);
            for l in am..=band {
                acc += coeffs.data[ShCoefficients::index(l, m)] * (table[tri_index(l, am)] * sign);
            }
            *slot = acc;
        }
        for j in 0..n_phi {
            let mut acc = Complex64::new(0.0, 0.0);
            for (g, m) in ring_modes.iter().zip(-(band as i64)..=(band as i64)) {
                acc += g * Complex64::from_polar(1.0, m as f64 * grid.phi[j]);
            }
            values[it * n_phi + j] = acc;
        }
    }
    SphereField {
        grid: grid.clone(),
        values,
    }
}

/// `sqrt(Σ_{ℓ > cutoff} |c_ℓm|²)`: the truncation floor of a band-`cutoff` design.
pub fn tail_energy(coeffs_full: &ShCoefficients, cutoff: usize) -> f64 {
    coeffs_full
        .iter()
        .filter(|(l, _, _)| *l > cutoff)
        .map(|(_, _, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `amplitude` on the polar cap or band `θ_lo ≤ θ ≤ θ_hi`, zero elsewhere.
pub fn cone_target(theta_lo: f64, theta_hi: f64, amplitude: Complex64, grid: &SphereGrid) -> Result<SphereField> {
    check_cone(theta_lo, theta_hi)?;
    let values = (0..grid.len())
        .map(|i| {
            let t = grid.theta[i / grid.n_phi];
            if t >= theta_lo && t <= theta_hi {
                amplitude
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(SphereField {
        grid: grid.clone(),
        values,
    })
}

/// Exact coefficients of the cone indicator `amplitude · 1[θ_lo ≤ θ ≤ θ_hi]`.
///
/// Only `m = 0` survives; `c_ℓ0 = 2π · amplitude · ∫ P̄_ℓ(x) dx` over
/// `cos θ_hi ≤ x ≤ cos θ_lo`, integrated exactly by a Gauss rule on that
/// interval, so no grid node has to straddle the cone edge.
pub fn cone_coefficients(theta_lo: f64, theta_hi: f64, amplitude: Complex64, band: usize) -> Result<ShCoefficients> {
    check_cone(theta_lo, theta_hi)?;
    let rule = gauss_legendre(band / 2 + 1)?.mapped(theta_hi.cos(), theta_lo.cos());
    let mut out = ShCoefficients::zeros(band);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - x * x).max(0.0).sqrt();
        let table = normalized_legendre_table(band, *x, s);
        for l in 0..=band {
            out.data[ShCoefficients::index(l, 0)] += amplitude * (2.0 * PI * w * table[tri_index(l, 0)]);
        }
    }
    Ok(out)
}

pub(crate) fn check_cone(theta_lo: f64, theta_hi: f64) -> Result<()> {
    if !(theta_lo >= 0.0 && theta_lo < theta_hi && theta_hi <= PI) {
        return Err(domain(alloc::format!(
            "cone bounds must satisfy 0 <= theta_lo < theta_hi <= pi, got [{theta_lo}, {theta_hi}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::sph_harm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weights_sum_to_four_pi() {
        let g = SphereGrid::new(14, 28).unwrap();
        let s: f64 = g.nodes().map(|n| n.weight).sum();
        assert!((s - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
    }

    #[test]
    fn index_map_is_a_bijection() {
        let band = 7;
        let mut seen = alloc::vec![false; (band + 1) * (band + 1)];
        for l in 0..=band {
            for m in -(l as i64)..=(l as i64) {
                let i = ShCoefficients::index(l, m);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(ShCoefficients::degree_order(i), (l, m));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn orthonormality_up_to_degree_twelve() {
        let g = SphereGrid::new(14, 28).unwrap();
        let mut ys = alloc::vec::Vec::new();
        for l in 0..=12usize {
            for m in -(l as i64)..=(l as i64) {
                let vals: Vec<_> = g.nodes().map(|n| sph_harm(l, m, n.theta, n.phi).unwrap()).collect();
                ys.push(vals);
            }
        }
        for (a, ya) in ys.iter().enumerate() {
            for (b, yb) in ys.iter().enumerate() {
                let s: Complex64 = (0..g.len()).map(|i| ya[i] * yb[i].conj() * g.weight(i)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-10, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn analyze_constant_mode() {
        let g = SphereGrid::for_band(6).unwrap();
        let y00 = (1.0 / (4.0 * PI)).sqrt();
        let f = SphereField {
            values: alloc::vec![c(y00, 0.0); g.len()],
            grid: g,
        };
        let coeffs = analyze(&f, 6).unwrap();
        for (l, m, v) in coeffs.iter() {
            let want = if l == 0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-10, "{l} {m}");
        }
    }

    #[test]
    fn analyze_recovers_two_modes() {
        let g = SphereGrid::for_band(6).unwrap();
        let values = g
            .nodes()
            .map(|n| {
                sph_harm(2, -1, n.theta, n.phi).unwrap() * 3.0 + c(0.0, 1.0) * sph_harm(5, 5, n.theta, n.phi).unwrap()
            })
            .collect();
        let coeffs = analyze(&SphereField { grid: g, values }, 6).unwrap();
        for (l, m, v) in coeffs.iter() {
            let want = match (l, m) {
                (2, -1) => c(3.0, 0.0),
                (5, 5) => c(0.0, 1.0),
                _ => c(0.0, 0.0),
            };
            assert!((v - want).norm() < 1e-10, "{l} {m} {v}");
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let g = SphereGrid::new(6, 28).unwrap();
        assert!(analyze(&SphereField::zeros(g), 6).is_err());
        let g = SphereGrid::new(7, 12).unwrap();
        assert!(analyze(&SphereField::zeros(g), 6).is_err());
    }

    #[test]
    fn synthesize_constant_and_zero() {
        let g = SphereGrid::for_band(3).unwrap();
        let zero = synthesize(&ShCoefficients::zeros(3), &g);
        assert!(zero.values.iter().all(|v| *v == c(0.0, 0.0)));
        let mut k = ShCoefficients::zeros(3);
        k.set(0, 0, c((4.0 * PI).sqrt(), 0.0));
        let one = synthesize(&k, &g);
        assert!(one.values.iter().all(|v| (v - 1.0).norm() < 1e-14));
    }

    #[test]
    fn full_sphere_cone_is_constant() {
        let g = SphereGrid::for_band(6).unwrap();
        let f = cone_target(0.0, PI, c(1.0, 0.0), &g).unwrap();
        let coeffs = analyze(&f, 6).unwrap();
        assert!((coeffs.get(0, 0) - (4.0 * PI).sqrt()).norm() < 1e-12);
        assert!(tail_energy(&coeffs, 0) < 1e-12);
    }

    #[test]
    fn exact_cone_coefficients() {
        let f = cone_coefficients(0.0, PI / 4.0, c(1.0, 0.0), 6).unwrap();
        let want = PI.sqrt() * (1.0 - 2f64.sqrt() / 2.0);
        assert!((f.get(0, 0).re - want).abs() < 1e-14);
        assert!((want - 0.519_140).abs() < 1e-6);
        // high-resolution sampled analysis converges to the exact values
        let g = SphereGrid::new(400, 13).unwrap();
        let sampled = analyze(&cone_target(0.0, PI / 4.0, c(1.0, 0.0), &g).unwrap(), 6).unwrap();
        for (l, m, v) in f.iter() {
            assert!((sampled.get(l, m) - v).norm() < 5e-3, "l={l} m={m}");
        }
        let full = cone_coefficients(0.0, PI, c(2.0, 0.0), 8).unwrap();
        assert!((full.get(0, 0).re - 2.0 * (4.0 * PI).sqrt()).abs() < 1e-13);
        assert!(tail_energy(&full, 0) < 1e-13);
        assert!(cone_coefficients(1.0, 0.5, c(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn inverted_cone_is_rejected() {
        let g = SphereGrid::for_band(2).unwrap();
        assert!(cone_target(1.0, 0.5, c(1.0, 0.0), &g).is_err());
        assert!(cone_target(0.0, 4.0, c(1.0, 0.0), &g).is_err());
    }

    #[test]
    fn cone_is_axisymmetric() {
        let g = SphereGrid::new(28, 56).unwrap();
        let f = cone_target(0.2 * PI, 0.5 * PI, c(1.0, 0.0), &g).unwrap();
        let coeffs = analyze(&f, 12).unwrap();
        for (_, m, v) in coeffs.iter() {
            if m != 0 {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tail_energy_nested() {
        let g = SphereGrid::new(42, 84).unwrap();
        let f = cone_target(0.0, PI / 4.0, c(1.0, 0.0), &g).unwrap();
        let coeffs = analyze(&f, 20).unwrap();
        assert!(tail_energy(&coeffs, 20) == 0.0);
        assert!(tail_energy(&coeffs, 8) <= tail_energy(&coeffs, 6));
        assert!(tail_energy(&coeffs, 6) > 0.0);
    }
}
