//! From the auxiliary source `h` to the potential `q = h / (u0 - ∫ g h)`.
//!
//! The volume potential `v(x) = ∫_D g(x, y) h(y) dy` is evaluated through the
//! addition theorem
//!
//! ```text
//! g(x, y) = ik Σ_ℓ j_ℓ(k r_<) h⁽¹⁾_ℓ(k r_>) Σ_m Y_ℓm(x̂) conj(Y_ℓm(ŷ)),
//! ```
//!
//! so with constant radial profiles `v(x) = Σ_ℓ R_ℓ(|x|) Σ_m h_ℓm Y_ℓm(x̂)`,
//! where
//!
//! ```text
//! R_ℓ(r) = ik [ h⁽¹⁾_ℓ(kr) ∫₀^r ρ² j_ℓ(kρ) dρ + j_ℓ(kr) ∫_r^b ρ² h⁽¹⁾_ℓ(kρ) dρ ].
//! ```
//!
//! The `1/|x-y|` singularity never appears: both radial integrals are smooth
//! apart from the `ρ^{1-ℓ}` growth of the Hankel integrand, which panels that
//! double in width away from `r` resolve.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ballgrid::BallGrid;
use crate::error::{domain, Error, Result};
use crate::specfun::{
    gauss_legendre, sph_bessel_j_seq_unchecked, sph_hankel1_seq_unchecked, sph_harm_all, QuadratureRule1D,
};
use crate::sphergrid::ShCoefficients;
use crate::synthesis::{degree_components, evaluate_on_grid, HExpansion};

/// Default floor on `|u0 - v|` below which a design is refused.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 1e-3;

/// Default number of attempts for [`perturb_h`].
pub const DEFAULT_PERTURBATION_BUDGET: usize = 64;

const PANEL_ORDER: usize = 16;

/// `R_ℓ(r)` tabulated at the radial nodes of a ball grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    k: f64,
    support_radius: f64,
    band: usize,
    radii: Vec<f64>,
    values: Vec<Complex64>,
}

impl RadialKernel {
    pub fn new(band: usize, k: f64, support_radius: f64, radii: &[f64]) -> Result<Self> {
        if !(k > 0.0) {
            return Err(domain("wavenumber must be positive"));
        }
        if !(support_radius > 0.0) {
            return Err(domain("support radius must be positive"));
        }
        let rule = gauss_legendre(PANEL_ORDER)?;
        let mut values = Vec::with_capacity(radii.len() * (band + 1));
        for &r in radii {
            if !(r >= 0.0) {
                return Err(domain("radius must be nonnegative"));
            }
            values.extend(radial_profile(band, k, support_radius, r, &rule));
        }
        Ok(Self {
            k,
            support_radius,
            band,
            radii: radii.to_vec(),
            values,
        })
    }

    /// Kernel on the radial nodes of `grid`.
    pub fn for_grid(band: usize, k: f64, support_radius: f64, grid: &BallGrid) -> Result<Self> {
        Self::new(band, k, support_radius, grid.radii())
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `R_ℓ` at radial node `ir`.
    pub fn value(&self, ir: usize, l: usize) -> Complex64 {
        self.values[ir * (self.band + 1) + l]
    }
}

/// Panels covering `[a, b]` no wider than `width`.
fn uniform_panels(a: f64, b: f64, width: f64, out: &mut Vec<(f64, f64)>) {
    if b <= a {
        return;
    }
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    for i in 0..n {
        let lo = a + h * i as f64;
        let hi = if i + 1 == n { b } else { lo + h };
        out.push((lo, hi));
    }
}

/// `[R_0(r), …, R_L(r)]`.
fn radial_profile(band: usize, k: f64, b: f64, r: f64, rule: &QuadratureRule1D) -> Vec<Complex64> {
    let ik = Complex64::new(0.0, k);
    let width = 2.0 / k;
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); band + 1];

    // inner: ∫₀^min(r,b) ρ² j_ℓ(kρ) dρ
    let inner_top = r.min(b);
    let mut panels = Vec::new();
    uniform_panels(0.0, inner_top, width, &mut panels);
    let mut inner = alloc::vec![0.0; band + 1];
    for &(lo, hi) in &panels {
        let q = rule.mapped(lo, hi);
        for (x, w) in q.nodes.iter().zip(&q.weights) {
            let j = sph_bessel_j_seq_unchecked(band, k * x);
            for l in 0..=band {
                inner[l] += w * x * x * j[l];
            }
        }
    }

    // outer: ∫_r^b ρ² h_ℓ(kρ) dρ, panels doubling away from r
    let mut outer = alloc::vec![Complex64::new(0.0, 0.0); band + 1];
    if r < b {
        panels.clear();
        if r == 0.0 {
            // only ℓ = 0 survives the j_ℓ(0) factor; ρ² h_0(kρ) is bounded
            uniform_panels(0.0, b, width, &mut panels);
        } else {
            let mut lo = r;
            while lo < b {
                let hi = (2.0 * lo).min(b);
                uniform_panels(lo, hi, width, &mut panels);
                lo = hi;
            }
        }
        let lmax = if r == 0.0 { 0 } else { band };
        for &(lo, hi) in &panels {
            let q = rule.mapped(lo, hi);
            for (x, w) in q.nodes.iter().zip(&q.weights) {
                let h = sph_hankel1_seq_unchecked(lmax, k * x);
                for l in 0..=lmax {
                    outer[l] += h[l] * (w * x * x);
                }
            }
        }
    }

    if r == 0.0 {
        out[0] = ik * outer[0];
        return out;
    }
    let j_r = sph_bessel_j_seq_unchecked(band, k * r);
    let h_r = sph_hankel1_seq_unchecked(band, k * r);
    for l in 0..=band {
        out[l] = ik * (h_r[l] * inner[l] + outer[l] * j_r[l]);
    }
    out
}

/// `v = ∫_D g(·, y) h(y) dy` at every node of `grid`.
pub fn volume_potential(h: &HExpansion, k: f64, grid: &BallGrid) -> Result<Vec<Complex64>> {
    let kernel = RadialKernel::for_grid(h.band(), k, h.support_radius, grid)?;
    Ok(volume_potential_with(&h.coeffs, &kernel, grid))
}

/// [`volume_potential`] with a precomputed radial kernel.
pub fn volume_potential_with(coeffs: &ShCoefficients, kernel: &RadialKernel, grid: &BallGrid) -> Vec<Complex64> {
    let band = coeffs.band().min(kernel.band);
    let c = coeffs.truncated(band);
    let comps = degree_components(&c, grid);
    let nl = band + 1;
    let n_ang = grid.len() / grid.radii().len();
    (0..grid.len())
        .map(|i| {
            let ir = i / n_ang;
            let a = i % n_ang;
            comps[a * nl..(a + 1) * nl]
                .iter()
                .enumerate()
                .map(|(l, s)| s * kernel.value(ir, l))
                .sum()
        })
        .collect()
}

/// `v(x)` at an arbitrary point, inside or outside the support ball.
pub fn volume_potential_at(h: &HExpansion, k: f64, x: [f64; 3]) -> Result<Complex64> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let kernel = RadialKernel::new(h.band(), k, h.support_radius, &[r])?;
    if r == 0.0 {
        return Ok(h.coeffs.get(0, 0) * kernel.value(0, 0) * (0.25 / core::f64::consts::PI).sqrt());
    }
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    let y = sph_harm_all(h.band(), theta, phi);
    Ok(h.coeffs
        .iter()
        .zip(&y)
        .map(|((l, _, c), y)| c * y * kernel.value(0, l))
        .sum())
}

/// `min |u0 - v|` over the grid and the node attaining it.
pub fn check_denominator(v: &[Complex64], k: f64, alpha: [f64; 3], grid: &BallGrid) -> (f64, usize) {
    let u0 = grid.plane_wave(k, alpha);
    let mut best = (f64::INFINITY, 0);
    for (i, (u, v)) in u0.iter().zip(v).enumerate() {
        let m = (u - v).norm();
        if m < best.0 {
            best = (m, i);
        }
    }
    best
}

/// `q`, the denominators and `h` on a ball grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub grid: BallGrid,
    pub q_values: Vec<Complex64>,
    pub denom_values: Vec<Complex64>,
    /// `h` at the nodes, the numerators of `q`.
    pub h_values: Vec<Complex64>,
    /// The expansion `h` came from.
    pub source_h: HExpansion,
}

impl PotentialField {
    /// A prescribed potential with no design history (used by verification
    /// and tests). Denominators are set to one.
    pub fn from_values(grid: BallGrid, q_values: Vec<Complex64>) -> Result<Self> {
        if q_values.len() != grid.len() {
            return Err(domain("potential values do not match the grid"));
        }
        let n = grid.len();
        let radius = grid.radius();
        Ok(Self {
            grid,
            h_values: q_values.clone(),
            q_values,
            denom_values: alloc::vec![Complex64::new(1.0, 0.0); n],
            source_h: HExpansion::new(ShCoefficients::zeros(0), radius),
        })
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q_values.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    pub fn min_denominator(&self) -> f64 {
        self.denom_values.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// `q = h / (u0 - v)` at every node.
///
/// Fails with [`Error::DegenerateDenominator`] listing every node whose
/// denominator modulus is at or below `floor`.
pub fn reconstruct_q(
    h: &HExpansion,
    v: &[Complex64],
    k: f64,
    alpha: [f64; 3],
    grid: &BallGrid,
    floor: f64,
) -> Result<PotentialField> {
    if v.len() != grid.len() {
        return Err(domain("volume potential does not match the grid"));
    }
    let u0 = grid.plane_wave(k, alpha);
    let denom: Vec<Complex64> = u0.iter().zip(v).map(|(u, v)| u - v).collect();
    let bad: Vec<usize> = denom
        .iter()
        .enumerate()
        .filter(|(_, d)| !(d.norm() > floor))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        let min_modulus = bad.iter().map(|&i| denom[i].norm()).fold(f64::INFINITY, f64::min);
        return Err(Error::DegenerateDenominator {
            nodes: bad,
            min_modulus,
        });
    }
    let h_values = evaluate_on_grid(h, grid);
    let q_values = h_values.iter().zip(&denom).map(|(h, d)| h / d).collect();
    Ok(PotentialField {
        grid: grid.clone(),
        q_values,
        denom_values: denom,
        h_values,
        source_h: h.clone(),
    })
}

/// Parameters of the denominator-restoring search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// `‖h - h_δ‖_{L²(D)}` must stay below this.
    pub delta: f64,
    pub seed: u64,
    pub floor: f64,
    pub budget: usize,
}

/// Result of [`perturb_h`].
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub h: HExpansion,
    /// Volume potential of the returned `h` on the grid.
    pub v: Vec<Complex64>,
    pub min_modulus: f64,
    /// Attempts drawn; zero when `h` already satisfied the floor.
    pub attempts: usize,
    /// `‖h - h_δ‖_{L²(D)}`.
    pub distance: f64,
}

/// Seeded search for a nearby `h_δ` whose denominator clears the floor.
///
/// Each attempt draws `h_δ = (1 + η) h + p` with complex `η` and a band-`L`
/// perturbation `p`, both sized so that `|η| ‖h‖ ≤ 0.45 δ` and
/// `‖p‖ ≤ 0.45 δ`, hence `‖h - h_δ‖ < δ`. Since `v` is linear in `h`, an
/// attempt costs one potential evaluation for `p`. The first attempt that
/// clears the floor is returned.
pub fn perturb_h(
    h: &HExpansion,
    kernel: &RadialKernel,
    k: f64,
    alpha: [f64; 3],
    grid: &BallGrid,
    spec: PerturbationSpec,
) -> Result<Perturbation> {
    if !(spec.delta > 0.0) {
        return Err(domain("perturbation budget delta must be positive"));
    }
    let v_h = volume_potential_with(&h.coeffs, kernel, grid);
    let (min0, _) = check_denominator(&v_h, k, alpha, grid);
    if min0 > spec.floor {
        return Ok(Perturbation {
            h: h.clone(),
            v: v_h,
            min_modulus: min0,
            attempts: 0,
            distance: 0.0,
        });
    }

    let u0 = grid.plane_wave(k, alpha);
    let b = h.support_radius;
    let coeff_to_l2 = (b * b * b / 3.0).sqrt();
    let h_norm = h.l2_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best = min0;
    let n = h.coeffs.as_slice().len();

    for attempt in 1..=spec.budget {
        let eta = if h_norm > 0.0 {
            let rad = 0.45 * spec.delta / h_norm * rng.gen::<f64>().sqrt();
            Complex64::from_polar(rad, rng.gen::<f64>() * 2.0 * core::f64::consts::PI)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let mut p: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
            .collect();
        let p_norm = coeff_to_l2 * p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let target = 0.45 * spec.delta * rng.gen::<f64>();
        if p_norm > 0.0 {
            for c in p.iter_mut() {
                *c *= target / p_norm;
            }
        }
        let p = ShCoefficients::from_vec(h.band(), p)?;
        let v_p = volume_potential_with(&p, kernel, grid);
        let one_eta = Complex64::new(1.0, 0.0) + eta;
        let v: Vec<Complex64> = v_h.iter().zip(&v_p).map(|(a, b)| one_eta * a + b).collect();
        let min = u0
            .iter()
            .zip(&v)
            .map(|(u, v)| (u - v).norm())
            .fold(f64::INFINITY, f64::min);
        best = best.max(min);
        if min > spec.floor {
            let data = h
                .coeffs
                .as_slice()
                .iter()
                .zip(p.as_slice())
                .map(|(c, p)| one_eta * c + p)
                .collect();
            let mut out = h.clone();
            out.coeffs = ShCoefficients::from_vec(h.band(), data)?;
            let distance = out.l2_distance(h);
            return Ok(Perturbation {
                h: out,
                v,
                min_modulus: min,
                attempts: attempt,
                distance,
            });
        }
    }
    Err(Error::PerturbationExhausted {
        attempts: spec.budget,
        best_min_modulus: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_h(value: f64) -> HExpansion {
        let mut coeffs = ShCoefficients::zeros(0);
        coeffs.set(0, 0, c(value * (4.0 * PI).sqrt(), 0.0));
        HExpansion::new(coeffs, 1.0)
    }

    fn pseudo_random_h(band: usize, seed: u64) -> HExpansion {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = ShCoefficients::zeros(band);
        for v in coeffs.as_mut_slice() {
            *v = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        HExpansion::new(coeffs, 1.0)
    }

    #[test]
    fn potential_at_origin_of_uniform_source() {
        let h = constant_h(1.0);
        let v0 = volume_potential_at(&h, 1.0, [0.0; 3]).unwrap();
        let i = c(0.0, 1.0);
        let want = i.exp() * (1.0 - i) - 1.0;
        assert!((v0 - want).norm() < 1e-12, "{v0} vs {want}");
        // the limit r → 0 of the general branch
        let v_eps = volume_potential_at(&h, 1.0, [0.0, 0.0, 1e-7]).unwrap();
        assert!((v_eps - want).norm() < 1e-9);
    }

    #[test]
    fn uniform_source_closed_form_everywhere() {
        // h ≡ 1: both radial integrals of R_0 have elementary antiderivatives
        let k: f64 = 1.3;
        let h = constant_h(1.0);
        for &r in &[0.2, 0.5, 0.9] {
            let got = volume_potential_at(&h, k, [r, 0.0, 0.0]).unwrap();
            let ik = c(0.0, k);
            // interior: ik [ h0(kr) ∫₀^r ρ² j0 + j0(kr) ∫_r^1 ρ² h0 ]
            let kr = k * r;
            let j0 = kr.sin() / kr;
            let h0 = -c(0.0, 1.0) * c(0.0, kr).exp() / kr;
            let int_j = (kr.sin() - kr * kr.cos()) / (k * k * k);
            // ∫ ρ² h0(kρ) = -i/k ∫ ρ e^{ikρ} = -i/k [e^{ikρ}(1/k² - iρ/k)]
            let anti = |rho: f64| c(0.0, k * rho).exp() * c(1.0 / (k * k), -rho / k);
            let int_h = -c(0.0, 1.0) / k * (anti(1.0) - anti(r));
            let want = ik * (h0 * int_j + j0 * int_h);
            assert!((got - want).norm() < 1e-12 * want.norm(), "r={r}");
        }
    }

    #[test]
    fn zero_source_gives_zero_potential() {
        let h = HExpansion::new(ShCoefficients::zeros(3), 1.0);
        let g = BallGrid::new(1.0, 4, 4, 8).unwrap();
        let v = volume_potential(&h, 1.0, &g).unwrap();
        assert!(v.iter().all(|z| *z == c(0.0, 0.0)));
        let (m, _) = check_denominator(&v, 1.0, [0.0, 0.0, 1.0], &g);
        assert!((m - 1.0).abs() < 1e-15);
        let q = reconstruct_q(&h, &v, 1.0, [0.0, 0.0, 1.0], &g, 1e-3).unwrap();
        assert!(q.q_values.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn grid_and_pointwise_paths_agree() {
        let h = pseudo_random_h(3, 1);
        let g = BallGrid::new(1.0, 3, 4, 7).unwrap();
        let v = volume_potential(&h, 1.0, &g).unwrap();
        for (i, x) in g.points().iter().enumerate() {
            let p = volume_potential_at(&h, 1.0, *x).unwrap();
            assert!((v[i] - p).norm() < 1e-12 * p.norm().max(1e-3));
        }
    }

    /// Brute-force `∫ g(x, y) h(y) dy` in spherical coordinates centred at
    /// `x`, with the polar axis pointing at the origin so the direction
    /// singularity of `h` sits on the axis. The `s²` Jacobian cancels `1/s`.
    fn brute_force_potential(h: &HExpansion, k: f64, x: [f64; 3]) -> Complex64 {
        let rx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let e3 = [-x[0] / rx, -x[1] / rx, -x[2] / rx];
        let helper = if e3[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let dot = helper[0] * e3[0] + helper[1] * e3[1] + helper[2] * e3[2];
        let mut e1 = [
            helper[0] - dot * e3[0],
            helper[1] - dot * e3[1],
            helper[2] - dot * e3[2],
        ];
        let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
        let e2 = [
            e3[1] * e1[2] - e3[2] * e1[1],
            e3[2] * e1[0] - e3[0] * e1[2],
            e3[0] * e1[1] - e3[1] * e1[0],
        ];
        let b = h.support_radius;
        let t_rule = gauss_legendre(96).unwrap().mapped(0.0, PI);
        let n_phi = 24;
        let s_rule = gauss_legendre(12).unwrap();
        let mut total = c(0.0, 0.0);
        for (t, wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
            let (st, ct) = t.sin_cos();
            for j in 0..n_phi {
                let p = 2.0 * PI * j as f64 / n_phi as f64;
                let (sp, cp) = p.sin_cos();
                let w = [
                    st * cp * e1[0] + st * sp * e2[0] + ct * e3[0],
                    st * cp * e1[1] + st * sp * e2[1] + ct * e3[1],
                    st * cp * e1[2] + st * sp * e2[2] + ct * e3[2],
                ];
                let xw = x[0] * w[0] + x[1] * w[1] + x[2] * w[2];
                let s_max = -xw + (xw * xw + b * b - rx * rx).sqrt();
                // panels refined geometrically around the closest approach to 0
                let s_c = rx * ct;
                let d = (rx * st).max(1e-14);
                let mut breaks = alloc::vec![0.0, s_max];
                if s_c > 0.0 && s_c < s_max {
                    breaks.push(s_c);
                    let mut off = d;
                    while off < s_max {
                        for cand in [s_c - off, s_c + off] {
                            if cand > 0.0 && cand < s_max {
                                breaks.push(cand);
                            }
                        }
                        off *= 2.0;
                    }
                }
                let mut off = 0.25;
                while off < s_max {
                    breaks.push(off);
                    off += 0.25;
                }
                breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut ray = c(0.0, 0.0);
                for pair in breaks.windows(2) {
                    if pair[1] - pair[0] < 1e-15 {
                        continue;
                    }
                    let q = s_rule.mapped(pair[0], pair[1]);
                    for (s, ws) in q.nodes.iter().zip(&q.weights) {
                        let y = [x[0] + s * w[0], x[1] + s * w[1], x[2] + s * w[2]];
                        let hy = crate::synthesis::evaluate_h(h, y);
                        ray += hy * c(0.0, k * s).exp() * (ws * s / (4.0 * PI));
                    }
                }
                total += ray * (wt * st * 2.0 * PI / n_phi as f64);
            }
        }
        total
    }

    #[test]
    fn semi_analytic_potential_matches_brute_force() {
        let h = pseudo_random_h(2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let r = 0.2 + 0.6 * rng.gen::<f64>();
            let ct = 2.0 * rng.gen::<f64>() - 1.0;
            let st = (1.0 - ct * ct).sqrt();
            let p = 2.0 * PI * rng.gen::<f64>();
            let x = [r * st * p.cos(), r * st * p.sin(), r * ct];
            let semi = volume_potential_at(&h, 1.0, x).unwrap();
            let brute = brute_force_potential(&h, 1.0, x);
            let rel = (semi - brute).norm() / brute.norm();
            assert!(rel < 1e-5, "x={x:?}: {semi} vs {brute}, rel {rel:e}");
        }
    }

    #[test]
    fn potential_is_linear() {
        let a = pseudo_random_h(2, 3);
        let b = pseudo_random_h(2, 4);
        let s = c(0.3, -1.7);
        let g = BallGrid::new(1.0, 4, 4, 8).unwrap();
        let va = volume_potential(&a, 1.0, &g).unwrap();
        let vb = volume_potential(&b, 1.0, &g).unwrap();
        let mut comb = a.clone();
        for (x, y) in comb.coeffs.as_mut_slice().iter_mut().zip(b.coeffs.as_slice()) {
            *x = *x * s + y;
        }
        let vc = volume_potential(&comb, 1.0, &g).unwrap();
        for i in 0..g.len() {
            let want = va[i] * s + vb[i];
            assert!((vc[i] - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn smallness_bound_keeps_denominator_away_from_zero() {
        // ‖h‖ = 1 ⇒ |v| ≤ ‖h‖/sqrt(4π) on the unit ball
        for seed in 0..4 {
            let mut h = pseudo_random_h(4, seed);
            let n = h.l2_norm();
            h.coeffs = h.coeffs.scaled(c(1.0 / n, 0.0));
            let g = BallGrid::new(1.0, 8, 8, 16).unwrap();
            let v = volume_potential(&h, 1.0, &g).unwrap();
            let (m, _) = check_denominator(&v, 1.0, [0.0, 0.0, 1.0], &g);
            assert!(m >= 1.0 - 1.0 / (4.0 * PI).sqrt() - 1e-9, "seed {seed}: {m}");
        }
    }

    #[test]
    fn reconstruction_identity() {
        let h = pseudo_random_h(3, 9);
        let g = BallGrid::new(1.0, 6, 6, 12).unwrap();
        let v = volume_potential(&h, 1.0, &g).unwrap();
        let q = reconstruct_q(&h, &v, 1.0, [0.0, 0.0, 1.0], &g, 1e-3).unwrap();
        for i in 0..g.len() {
            let back = q.q_values[i] * q.denom_values[i];
            assert!((back - q.h_values[i]).norm() <= 1e-12 * (1.0 + q.h_values[i].norm()));
        }
        let max = q.q_values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(q.max_abs_q(), max);
    }

    /// `h` scaled so the denominator vanishes (to rounding) at one node.
    fn degenerate_case() -> (HExpansion, BallGrid, RadialKernel, usize) {
        let g = BallGrid::new(1.0, 6, 6, 12).unwrap();
        let base = pseudo_random_h(2, 5);
        let kernel = RadialKernel::for_grid(2, 1.0, 1.0, &g).unwrap();
        let v = volume_potential_with(&base.coeffs, &kernel, &g);
        let node = g.len() / 2 + 3;
        let u0 = g.plane_wave(1.0, [0.0, 0.0, 1.0]);
        let s = u0[node] / v[node];
        let mut h = base;
        h.coeffs = h.coeffs.scaled(s);
        (h, g, kernel, node)
    }

    #[test]
    fn degenerate_denominator_is_reported_with_node() {
        let (h, g, kernel, node) = degenerate_case();
        let v = volume_potential_with(&h.coeffs, &kernel, &g);
        let (m, at) = check_denominator(&v, 1.0, [0.0, 0.0, 1.0], &g);
        assert!(m < 1e-4);
        assert_eq!(at, node);
        match reconstruct_q(&h, &v, 1.0, [0.0, 0.0, 1.0], &g, 1e-3) {
            Err(Error::DegenerateDenominator { nodes, min_modulus }) => {
                assert!(nodes.contains(&node));
                assert!(min_modulus < 1e-4);
            }
            other => panic!("expected degenerate denominator, got {other:?}"),
        }
    }

    #[test]
    fn perturbation_restores_denominator() {
        let (h, g, kernel, _) = degenerate_case();
        let delta = 0.05 * h.l2_norm();
        let spec = PerturbationSpec {
            delta,
            seed: 0,
            floor: 1e-3,
            budget: DEFAULT_PERTURBATION_BUDGET,
        };
        let out = perturb_h(&h, &kernel, 1.0, [0.0, 0.0, 1.0], &g, spec).unwrap();
        assert!(out.attempts >= 1);
        assert!(out.min_modulus > 1e-3);
        assert!(out.distance < delta);
        // distance by grid quadrature too
        let a = evaluate_on_grid(&h, &g);
        let b = evaluate_on_grid(&out.h, &g);
        let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(g.l2_norm(&diff) < delta);
        let v = volume_potential_with(&out.h.coeffs, &kernel, &g);
        for (x, y) in v.iter().zip(&out.v) {
            assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
        }
        assert!(reconstruct_q(&out.h, &v, 1.0, [0.0, 0.0, 1.0], &g, 1e-3).is_ok());
    }

    #[test]
    fn compliant_source_is_not_perturbed() {
        let h = pseudo_random_h(2, 2);
        let g = BallGrid::new(1.0, 4, 4, 8).unwrap();
        let kernel = RadialKernel::for_grid(2, 1.0, 1.0, &g).unwrap();
        let spec = PerturbationSpec {
            delta: 0.1,
            seed: 0,
            floor: 1e-3,
            budget: 8,
        };
        let out = perturb_h(&h, &kernel, 1.0, [0.0, 0.0, 1.0], &g, spec).unwrap();
        assert_eq!(out.attempts, 0);
        assert_eq!(out.h, h);
    }
}
