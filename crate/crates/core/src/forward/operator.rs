//! The discrete Lippmann–Schwinger operator `u ↦ u + K (q u)` on a ball grid.
//!
//! `K_ij` is the integral of `g(x_i, ·)` over a ball of the same volume as
//! node `j`'s quadrature cell, centred at `x_j`. Outside that ball the mean
//! value property gives a closed form, inside it the `ℓ = 0` term of the
//! addition theorem does, so the weak singularity needs no special casing.
//!
//! Rotating a product grid about the z axis by one azimuthal step maps it to
//! itself, hence `K` is block circulant over `φ`: it depends on ring pairs and
//! the azimuthal offset only. Each Fourier mode is a dense `rings × rings`
//! block; only `m ≤ n_φ / 2` are stored because the blocks are even in `m`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::ballgrid::BallGrid;
use crate::error::{config, Result};

/// Stored mode blocks above this many bytes are refused.
pub const MEMORY_LIMIT_BYTES: usize = 2 << 30;

/// `sin z - z cos z`, accurate for small `z`.
fn sin_minus_zcos(z: f64) -> f64 {
    if z < 0.1 {
        // Σ_{n≥1} (-1)^{n+1} 2n z^{2n+1} / (2n+1)!
        let z2 = z * z;
        let mut term = z * z2 / 3.0;
        let mut sum = term;
        for n in 2..8 {
            let nf = n as f64;
            term *= -z2 * nf / ((nf - 1.0) * (2.0 * nf) * (2.0 * nf + 1.0));
            sum += term;
        }
        sum
    } else {
        z.sin() - z * z.cos()
    }
}

/// `(1 - iz) e^{iz} - 1`, accurate for small `z`.
fn one_minus_iz_exp_minus_one(z: f64) -> Complex64 {
    if z < 0.1 {
        // Σ_{p≥2} (1-p) (iz)^p / p!
        let iz = Complex64::new(0.0, z);
        let mut pow = iz;
        let mut fact = 1.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for p in 2..14 {
            pow *= iz;
            fact *= p as f64;
            sum += pow * ((1.0 - p as f64) / fact);
        }
        sum
    } else {
        Complex64::new(1.0, -z) * Complex64::from_polar(1.0, z) - 1.0
    }
}

/// `∫_{|y - c| < R} g(x, y) dy` with `d = |x - c|`.
pub fn cell_kernel(k: f64, d: f64, cell_radius: f64) -> Complex64 {
    let r = cell_radius;
    let k3 = k * k * k;
    if d >= r {
        return Complex64::from_polar(1.0, k * d) * (sin_minus_zcos(k * r) / (k3 * d));
    }
    let self_part = one_minus_iz_exp_minus_one(k * r) / (k * k);
    if d == 0.0 {
        return self_part;
    }
    // ik [h0(kd) ∫₀^d ρ² j0 + j0(kd) ∫_d^R ρ² h0]
    let near = Complex64::from_polar(1.0, k * d) * (sin_minus_zcos(k * d) / (k3 * d));
    let kd = k * d;
    let j0 = if kd < 1e-4 { 1.0 - kd * kd / 6.0 } else { kd.sin() / kd };
    // [e^{ikρ}(1/k² - iρ/k)]_d^R = (self_part(R) - self_part(d))
    let far = (self_part - one_minus_iz_exp_minus_one(kd) / (k * k)) * j0;
    near + far
}

/// Block-circulant Lippmann–Schwinger operator on one ball grid.
#[derive(Debug, Clone)]
pub struct LsOperator {
    k: f64,
    n_rings: usize,
    n_phi: usize,
    /// Stored modes `m = 0..=modes_stored-1`, each `n_rings²`, row = target.
    blocks: Vec<Vec<Complex64>>,
    twiddle: Vec<Complex64>,
}

impl LsOperator {
    /// Blocks for every azimuthal mode.
    pub fn new(grid: &BallGrid, k: f64) -> Result<Self> {
        Self::build(grid, k, grid.n_phi() / 2 + 1)
    }

    /// Only the `m = 0` block, for fields without azimuthal dependence.
    pub fn axisymmetric(grid: &BallGrid, k: f64) -> Result<Self> {
        Self::build(grid, k, 1)
    }

    fn build(grid: &BallGrid, k: f64, modes: usize) -> Result<Self> {
        let n_rings = grid.n_rings();
        let n_phi = grid.n_phi();
        let bytes = n_rings
            .saturating_mul(n_rings)
            .saturating_mul(modes)
            .saturating_mul(core::mem::size_of::<Complex64>());
        if bytes > MEMORY_LIMIT_BYTES {
            return Err(config(alloc::format!(
                "operator blocks need {} MiB for a {}-ring grid with {modes} azimuthal modes; reduce the ball grid",
                bytes >> 20,
                n_rings
            )));
        }
        let (_, n_theta, _) = grid.dims();
        let radii = grid.radii();
        let sin_t = grid.sin_theta();
        let theta = grid.theta();
        let half = n_phi / 2;
        // sin²(Δφ/2) and mode weights per offset Δ = 0..=half
        let s2: Vec<f64> = (0..=half)
            .map(|d| {
                let s = (PI * d as f64 / n_phi as f64).sin();
                s * s
            })
            .collect();
        let weights: Vec<Vec<f64>> = (0..modes)
            .map(|m| {
                (0..=half)
                    .map(|d| {
                        let mult = if d == 0 || (n_phi.is_multiple_of(2) && d == half) {
                            1.0
                        } else {
                            2.0
                        };
                        mult * (2.0 * PI * (m * d) as f64 / n_phi as f64).cos()
                    })
                    .collect()
            })
            .collect();
        let cell = grid.cell_radius();
        let mut blocks = alloc::vec![alloc::vec![Complex64::new(0.0, 0.0); n_rings * n_rings]; modes];
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); half + 1];
        for a in 0..n_rings {
            let (ra, ta) = (radii[a / n_theta], a % n_theta);
            for b in 0..n_rings {
                let (rb, tb) = (radii[b / n_theta], b % n_theta);
                let radius_b = cell[b * n_phi];
                let dr = ra - rb;
                let st = ((theta[ta] - theta[tb]) * 0.5).sin();
                let base = dr * dr + 4.0 * ra * rb * st * st;
                let cross = 4.0 * ra * rb * sin_t[ta] * sin_t[tb];
                for (slot, s) in buf.iter_mut().zip(&s2) {
                    let d = (base + cross * s).max(0.0).sqrt();
                    *slot = cell_kernel(k, d, radius_b);
                }
                for (block, w) in blocks.iter_mut().zip(&weights) {
                    block[a * n_rings + b] = buf.iter().zip(w).map(|(v, w)| v * w).sum();
                }
            }
        }
        let twiddle = (0..n_phi)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n_phi as f64))
            .collect();
        Ok(Self {
            k,
            n_rings,
            n_phi,
            blocks,
            twiddle,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn is_axisymmetric_only(&self) -> bool {
        self.blocks.len() == 1 && self.n_phi > 1
    }

    fn block(&self, m: usize) -> &[Complex64] {
        let mm = m.min(self.n_phi - m);
        &self.blocks[mm]
    }

    /// `y = K w` for full node vectors.
    pub fn apply_kernel(&self, w: &[Complex64], y: &mut [Complex64]) {
        let (nr, np) = (self.n_rings, self.n_phi);
        let zero = Complex64::new(0.0, 0.0);
        if self.is_axisymmetric_only() {
            // caller guarantees no azimuthal dependence; use ring means
            let mean: Vec<Complex64> = (0..nr)
                .map(|b| w[b * np..(b + 1) * np].iter().sum::<Complex64>() / np as f64)
                .collect();
            let block = &self.blocks[0];
            for a in 0..nr {
                let row = &block[a * nr..(a + 1) * nr];
                let v: Complex64 = row.iter().zip(&mean).map(|(k, x)| k * x).sum();
                for slot in &mut y[a * np..(a + 1) * np] {
                    *slot = v;
                }
            }
            return;
        }
        // forward DFT per ring: ŵ_m(b) = Σ_j w(b, j) e^{-2πi mj/n}
        let mut spec = alloc::vec![zero; nr * np];
        for b in 0..nr {
            let ring = &w[b * np..(b + 1) * np];
            for m in 0..np {
                let mut acc = zero;
                for (j, v) in ring.iter().enumerate() {
                    acc += v * self.twiddle[(m * j) % np];
                }
                spec[m * nr + b] = acc;
            }
        }
        let mut out_spec = alloc::vec![zero; nr * np];
        for m in 0..np {
            let block = self.block(m);
            let src = &spec[m * nr..(m + 1) * nr];
            let dst = &mut out_spec[m * nr..(m + 1) * nr];
            for a in 0..nr {
                dst[a] = block[a * nr..(a + 1) * nr].iter().zip(src).map(|(k, x)| k * x).sum();
            }
        }
        // inverse DFT
        let scale = 1.0 / np as f64;
        for a in 0..nr {
            for j in 0..np {
                let mut acc = zero;
                for m in 0..np {
                    acc += out_spec[m * nr + a] * self.twiddle[(m * j) % np].conj();
                }
                y[a * np + j] = acc * scale;
            }
        }
    }

    /// Reduced `m = 0` matvec on ring values `x`: `y = x + K̂_0 (q x)`.
    pub(crate) fn apply_reduced(&self, q: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
        let nr = self.n_rings;
        let qx: Vec<Complex64> = q.iter().zip(x).map(|(a, b)| a * b).collect();
        let block = &self.blocks[0];
        for a in 0..nr {
            let row = &block[a * nr..(a + 1) * nr];
            y[a] = x[a] + row.iter().zip(&qx).map(|(k, v)| k * v).sum::<Complex64>();
        }
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gauss_legendre;

    #[test]
    fn series_branches_are_continuous() {
        for z in [0.0999999, 0.1] {
            let a = sin_minus_zcos(z);
            assert!((a - (z.sin() - z * z.cos())).abs() < 1e-15);
        }
        let z = 0.0999999;
        let exact = Complex64::new(1.0, -z) * Complex64::from_polar(1.0, z) - 1.0;
        assert!((one_minus_iz_exp_minus_one(z) - exact).norm() < 1e-15);
    }

    /// Direct quadrature of `∫_{|y-c|<R} g(x,y) dy` in coordinates centred
    /// at `x`, with `x - c = d e_z`; the radial integral is elementary.
    fn brute(k: f64, d: f64, r: f64) -> Complex64 {
        let t = gauss_legendre(80).unwrap().mapped(0.0, 1.0);
        // ∫ s e^{iks} ds = e^{iks}(1/k² - is/k)
        let anti = |s: f64| Complex64::from_polar(1.0, k * s) * Complex64::new(1.0 / (k * k), -s / k);
        let ray = |mu: f64| {
            let disc = ((d * mu) * (d * mu) - (d * d - r * r)).max(0.0);
            let s_hi = -d * mu + disc.sqrt();
            let s_lo = (-d * mu - disc.sqrt()).max(0.0);
            (anti(s_hi) - anti(s_lo)) * 0.5
        };
        let mut total = Complex64::new(0.0, 0.0);
        if d < r {
            for (x, w) in t.nodes.iter().zip(&t.weights) {
                total += (ray(2.0 * x - 1.0)) * (2.0 * w);
            }
        } else {
            // only mu ≤ -mu_t hits the ball; τ² substitution removes the
            // square-root behaviour at the tangent cone
            let mu_t = (1.0 - r * r / (d * d)).sqrt();
            for (tau, w) in t.nodes.iter().zip(&t.weights) {
                let mu = -(mu_t + (1.0 - mu_t) * tau * tau);
                total += ray(mu) * (w * 2.0 * (1.0 - mu_t) * tau);
            }
        }
        total
    }

    #[test]
    fn cell_average_matches_direct_integral() {
        let k = 1.7;
        let r = 0.3;
        for d in [0.0, 0.05, 0.2, 0.29, 0.31, 0.6, 2.0] {
            let got = cell_kernel(k, d, r);
            let want = brute(k, d, r);
            assert!((got - want).norm() < 1e-10 * want.norm(), "d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn kernel_is_continuous_across_cell_boundary() {
        let (k, r) = (1.0, 0.2);
        let a = cell_kernel(k, r * (1.0 - 1e-12), r);
        let b = cell_kernel(k, r, r);
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn fourier_matvec_matches_direct_sum() {
        let grid = BallGrid::new(1.0, 3, 3, 6).unwrap();
        let k = 1.0;
        let op = LsOperator::new(&grid, k).unwrap();
        let w: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut y = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
        op.apply_kernel(&w, &mut y);
        let pts = grid.points();
        let cell = grid.cell_radius();
        for i in 0..grid.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..grid.len() {
                let d = ((pts[i][0] - pts[j][0]).powi(2)
                    + (pts[i][1] - pts[j][1]).powi(2)
                    + (pts[i][2] - pts[j][2]).powi(2))
                .sqrt();
                acc += cell_kernel(k, d, cell[j]) * w[j];
            }
            assert!((acc - y[i]).norm() < 1e-12 * (1.0 + acc.norm()), "node {i}");
        }
    }

    #[test]
    fn memory_guard_refuses_huge_grids() {
        let grid = BallGrid::new(1.0, 200, 200, 4).unwrap();
        assert!(matches!(LsOperator::new(&grid, 1.0), Err(crate::Error::Config(_))));
    }
}
