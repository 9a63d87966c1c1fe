//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{domain, Error, Result};

/// A one-dimensional quadrature rule `∫ f ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule1D {
    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// The same rule affinely mapped from `(-1, 1)` onto `(a, b)`.
    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss–Legendre rule on `(-1, 1)`, nodes in increasing order.
///
/// Nodes are Newton-refined roots of `P_n`; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule1D> {
    if n == 0 {
        return Err(domain("Gauss–Legendre rule needs at least one node"));
    }
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // roots come out in decreasing order from the cosine guess
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule1D { nodes, weights })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// 7-point Gauss weights at GK_NODES[1], [3], [5], [7]
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Maximum number of subintervals [`integrate_adaptive`] will create.
pub const ADAPTIVE_BUDGET: usize = 2000;

/// Adaptive 15-point Gauss–Kronrod integration of `f` over `[a, b]` to
/// absolute tolerance `tol`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate is below `tol`. Returns `(value, error_estimate)`.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(domain("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    loop {
        let total_err: f64 = intervals.iter().map(|s| s.3).sum();
        if total_err <= tol {
            break;
        }
        if intervals.len() >= ADAPTIVE_BUDGET {
            let estimate = intervals.iter().map(|s| s.2).sum();
            return Err(Error::Quadrature {
                estimate,
                error: total_err,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, m);
        let (v2, e2) = gk15(&mut f, m, hi);
        intervals.push((lo, m, v1, e1));
        intervals.push((m, hi, v2, e2));
    }
    // sort by left endpoint so the sum order is fixed by geometry
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = intervals.iter().map(|s| s.2).sum();
    let error = intervals.iter().map(|s| s.3).sum();
    Ok((value, error))
}

/// `g_{μ,ν}(k) = ∫₀¹ x^{μ+1/2} J_ν(kx) dx` for half-integer `ν = ℓ + 1/2`,
/// by adaptive quadrature to absolute tolerance `tol`.
pub fn radial_bessel_moment(mu: f64, nu: f64, k: f64, tol: f64) -> Result<f64> {
    let degree = half_integer_degree(nu)?;
    if !(mu + 0.5 > -1.0) {
        return Err(domain("radial moment needs mu + 1/2 > -1"));
    }
    if !(k > 0.0) {
        return Err(domain("wavenumber must be positive"));
    }
    let power = mu + 0.5;
    let scale = (2.0 * k / PI).sqrt();
    // J_{l+1/2}(z) = sqrt(2z/pi) j_l(z)
    let integrand = |x: f64| {
        let j = super::bessel::sph_bessel_j_unchecked(degree, k * x);
        x.powf(power) * scale * x.sqrt() * j
    };
    integrate_adaptive(integrand, 0.0, 1.0, tol).map(|(v, _)| v)
}

/// Radial moment with a tolerance relative to the moment's own magnitude.
pub(crate) fn radial_bessel_moment_rel(mu: f64, nu: f64, k: f64, rel: f64) -> Result<f64> {
    let degree = half_integer_degree(nu)?;
    let scale = (2.0 * k / PI).sqrt();
    let power = mu + 0.5;
    let rough = gauss_legendre(32)?
        .mapped(0.0, 1.0)
        .integrate(|x| x.powf(power) * scale * x.sqrt() * super::bessel::sph_bessel_j_unchecked(degree, k * x));
    if rough == 0.0 {
        return radial_bessel_moment(mu, nu, k, f64::MIN_POSITIVE);
    }
    radial_bessel_moment(mu, nu, k, rel * rough.abs())
}

fn half_integer_degree(nu: f64) -> Result<usize> {
    let l = nu - 0.5;
    if !(l >= 0.0) || l.fract() != 0.0 || l > 1000.0 {
        return Err(domain(alloc::format!(
            "Bessel order {nu} is not of the form l + 1/2 with l >= 0"
        )));
    }
    Ok(l as usize)
}
