//! Associated Legendre functions and orthonormal spherical harmonics.
//!
//! Convention: Condon–Shortley phase is included in `P_ℓ^m`, and
//!
//! ```text
//! Y_ℓm(θ, φ) = sqrt((2ℓ+1)/(4π) (ℓ-m)!/(ℓ+m)!) P_ℓ^m(cos θ) e^{imφ},   m ≥ 0
//! Y_ℓ,-m     = (-1)^m conj(Y_ℓm)
//! ```
//!
//! so that `Y_ℓm(-β) = (-1)^ℓ Y_ℓm(β)` and `conj(Y_ℓm) = (-1)^m Y_ℓ,-m`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Result};

/// `P_ℓ^m(x)` with Condon–Shortley phase, `0 ≤ m ≤ ℓ`, `|x| ≤ 1`.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(domain(alloc::format!("assoc_legendre: m={m} exceeds l={l}")));
    }
    if !(x.abs() <= 1.0) {
        return Err(domain("assoc_legendre: |x| must not exceed 1"));
    }
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= -((2 * i - 1) as f64) * s;
    }
    if l == m {
        return Ok(pmm);
    }
    let mut p_prev = pmm;
    let mut p = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * x * p - (ll + m - 1) as f64 * p_prev) / (ll - m) as f64;
        p_prev = p;
        p = next;
    }
    Ok(p)
}

/// Index of `(ℓ, m)`, `0 ≤ m ≤ ℓ`, in a triangular table.
#[inline]
pub(crate) fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized `sqrt((2ℓ+1)/(4π) (ℓ-m)!/(ℓ+m)!) P_ℓ^m(cos θ)` for
/// `0 ≤ m ≤ ℓ ≤ lmax`, stored by [`tri_index`].
///
/// Takes `cos θ` and `sin θ` separately so that poles keep full precision.
pub(crate) fn normalized_legendre_table(lmax: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; tri_index(lmax, lmax) + 1];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
        }
        out[tri_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mut prev = pmm;
        let mut cur = ((2 * m + 3) as f64).sqrt() * cos_t * pmm;
        out[tri_index(m + 1, m)] = cur;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (cos_t * cur - b * prev);
            prev = cur;
            cur = next;
            out[tri_index(l, m)] = cur;
        }
    }
    out
}

/// `Y_ℓm(θ, φ)` in the orthonormal Condon–Shortley convention.
pub fn sph_harm(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(domain(alloc::format!("sph_harm: |m|={am} exceeds l={l}")));
    }
    let table = normalized_legendre_table(l, theta.cos(), theta.sin());
    let p = table[tri_index(l, am)];
    let y = Complex64::from_polar(p, am as f64 * phi);
    Ok(if m >= 0 {
        y
    } else if am.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    })
}

/// All `Y_ℓm(θ, φ)` for `ℓ ≤ lmax`, flat index `ℓ² + ℓ + m`.
pub fn sph_harm_all(lmax: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let table = normalized_legendre_table(lmax, theta.cos(), theta.sin());
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    for l in 0..=lmax {
        let base = l * l + l;
        for m in 0..=l {
            let y = Complex64::from_polar(table[tri_index(l, m)], m as f64 * phi);
            out[base + m] = y;
            if m > 0 {
                out[base - m] = if m % 2 == 0 { y.conj() } else { -y.conj() };
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        assert_eq!(assoc_legendre(0, 0, 0.3).unwrap(), 1.0);
        assert_eq!(assoc_legendre(1, 0, 0.5).unwrap(), 0.5);
        let want = -3.0 * 0.5 * (1.0f64 - 0.25).sqrt();
        assert!((assoc_legendre(2, 1, 0.5).unwrap() - want).abs() < 1e-15);
        assert!((want + 1.299_038).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(assoc_legendre(1, 2, 0.0).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
        assert!(sph_harm(2, -3, 0.1, 0.2).is_err());
    }

    #[test]
    fn legendre_orthogonality_by_quadrature() {
        // ∫ P_l^m P_l'^m dx = 2/(2l+1) (l+m)!/(l-m)! δ_ll'
        let rule = crate::specfun::gauss_legendre(40).unwrap();
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        for m in 0..4 {
            for l in m..8 {
                for lp in m..8 {
                    let v = rule.integrate(|x| assoc_legendre(l, m, x).unwrap() * assoc_legendre(lp, m, x).unwrap());
                    let want = if l == lp {
                        2.0 / (2 * l + 1) as f64 * fact(l + m) / fact(l - m)
                    } else {
                        0.0
                    };
                    assert!((v - want).abs() < 1e-10 * want.max(1.0), "l={l} l'={lp} m={m}");
                }
            }
        }
    }

    #[test]
    fn normalized_table_matches_unnormalized() {
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let theta: f64 = 0.83;
        let t = normalized_legendre_table(10, theta.cos(), theta.sin());
        for l in 0..=10 {
            for m in 0..=l {
                let n = ((2 * l + 1) as f64 / (4.0 * PI) * fact(l - m) / fact(l + m)).sqrt();
                let p = assoc_legendre(l, m, theta.cos()).unwrap();
                assert!((t[tri_index(l, m)] - n * p).abs() < 1e-13 * (n * p).abs().max(1e-3));
            }
        }
    }

    #[test]
    fn constant_mode() {
        let y = sph_harm(0, 0, 1.234, -0.5).unwrap();
        assert!((y.re - 0.282_094_8).abs() < 1e-7 && y.im == 0.0);
    }

    #[test]
    fn antipodal_parity() {
        let (t, p) = (0.7, 1.1);
        let a = sph_harm(3, 2, PI - t, p + PI).unwrap();
        let b = sph_harm(3, 2, t, p).unwrap();
        assert!((a + b).norm() < 1e-14);
    }

    #[test]
    fn all_matches_single() {
        let (t, p) = (2.1, 4.0);
        let all = sph_harm_all(6, t, p);
        for l in 0..=6usize {
            for m in -(l as i64)..=(l as i64) {
                let idx = (l * l + l) as i64 + m;
                assert!((all[idx as usize] - sph_harm(l, m, t, p).unwrap()).norm() < 1e-14);
            }
        }
    }
}
