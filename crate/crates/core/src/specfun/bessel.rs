//! Spherical Bessel and Hankel functions of integer order.
//!
//! `j_ℓ` uses upward recurrence from the closed forms while `ℓ ≤ r` and
//! Miller's downward recurrence above that, matched to the upward values at
//! the switchover. Small arguments (`r < 1`) use the power series directly.
//! `y_ℓ` is always computed upward, which is its stable direction.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Result};

/// `j_ℓ(r)` for a single order.
pub fn sph_bessel_j(l: usize, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain("spherical Bessel j needs r >= 0"));
    }
    Ok(sph_bessel_j_unchecked(l, r))
}

pub(crate) fn sph_bessel_j_unchecked(l: usize, r: f64) -> f64 {
    if r < 1.0 {
        return j_series(l, r);
    }
    sph_bessel_j_seq_unchecked(l, r)[l]
}

/// `[j_0(r), …, j_lmax(r)]`.
pub fn sph_bessel_j_seq(lmax: usize, r: f64) -> Result<Vec<f64>> {
    if !(r >= 0.0) {
        return Err(domain("spherical Bessel j needs r >= 0"));
    }
    Ok(sph_bessel_j_seq_unchecked(lmax, r))
}

pub(crate) fn sph_bessel_j_seq_unchecked(lmax: usize, r: f64) -> Vec<f64> {
    if r < 1.0 {
        return (0..=lmax).map(|l| j_series(l, r)).collect();
    }
    let (s, c) = (r.sin(), r.cos());
    let mut out = alloc::vec![0.0; lmax + 1];
    out[0] = s / r;
    if lmax == 0 {
        return out;
    }
    out[1] = s / (r * r) - c / r;
    // upward region: l <= r
    let switch = (r.floor() as usize).max(1).min(lmax);
    for l in 1..switch {
        out[l + 1] = (2 * l + 1) as f64 / r * out[l] - out[l - 1];
    }
    if switch == lmax {
        return out;
    }
    let tail = miller_downward(lmax, switch - 1, r);
    // tail[i] is proportional to j_{switch-1+i}; match on the two lowest
    // orders, which cannot vanish together
    let (a0, a1) = (out[switch - 1], out[switch]);
    let scale = tail[0].abs().max(tail[1].abs());
    let (m0, m1) = (tail[0] / scale, tail[1] / scale);
    let norm = (a0 * m0 + a1 * m1) / (m0 * m0 + m1 * m1);
    for l in (switch + 1)..=lmax {
        out[l] = norm * (tail[l - switch + 1] / scale);
    }
    out
}

/// Unnormalized downward recurrence, returning values proportional to
/// `j_lo, …, j_lmax`.
fn miller_downward(lmax: usize, lo: usize, r: f64) -> Vec<f64> {
    let extra = (50.0 * (lmax as f64).max(r)).sqrt() as usize + 20;
    let start = lmax + extra;
    let mut values = alloc::vec![0.0; lmax - lo + 1];
    let mut upper = 0.0;
    let mut current = 1e-280;
    for l in (lo + 1..=start).rev() {
        // current ∝ j_l, upper ∝ j_{l+1}
        if l <= lmax {
            values[l - lo] = current;
        }
        let lower = (2 * l + 1) as f64 / r * current - upper;
        upper = current;
        current = lower;
        if current.abs() > 1e250 {
            upper *= 1e-250;
            current *= 1e-250;
            for v in values.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    values[0] = current;
    values
}

fn j_series(l: usize, r: f64) -> f64 {
    if r == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let mut prefactor = 1.0;
    for i in 1..=l {
        prefactor *= r / (2 * i + 1) as f64;
    }
    if prefactor == 0.0 {
        return 0.0;
    }
    let x = -0.5 * r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..100 {
        term *= x / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

/// `[y_0(r), …, y_lmax(r)]`, spherical Neumann functions. `r > 0`.
pub fn sph_bessel_y_seq(lmax: usize, r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(domain("spherical Bessel y needs r > 0"));
    }
    Ok(sph_bessel_y_seq_unchecked(lmax, r))
}

pub(crate) fn sph_bessel_y_seq_unchecked(lmax: usize, r: f64) -> Vec<f64> {
    let (s, c) = (r.sin(), r.cos());
    let mut out = alloc::vec![0.0; lmax + 1];
    out[0] = -c / r;
    if lmax >= 1 {
        out[1] = -c / (r * r) - s / r;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / r * out[l] - out[l - 1];
    }
    out
}

/// `h⁽¹⁾_ℓ(r) = j_ℓ(r) + i y_ℓ(r)`. `r > 0`.
pub fn sph_hankel1(l: usize, r: f64) -> Result<Complex64> {
    sph_hankel1_seq(l, r).map(|v| v[l])
}

/// `[h⁽¹⁾_0(r), …, h⁽¹⁾_lmax(r)]`. `r > 0`.
pub fn sph_hankel1_seq(lmax: usize, r: f64) -> Result<Vec<Complex64>> {
    if !(r > 0.0) {
        return Err(domain("spherical Hankel function needs r > 0"));
    }
    Ok(sph_hankel1_seq_unchecked(lmax, r))
}

pub(crate) fn sph_hankel1_seq_unchecked(lmax: usize, r: f64) -> Vec<Complex64> {
    let j = sph_bessel_j_seq_unchecked(lmax, r);
    let y = sph_bessel_y_seq_unchecked(lmax, r);
    j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn closed_forms_at_one() {
        assert_eq!(sph_bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(sph_bessel_j(3, 0.0).unwrap(), 0.0);
        assert!(close(sph_bessel_j(0, 1.0).unwrap(), 1f64.sin(), 1e-15));
        let j1 = 1f64.sin() - 1f64.cos();
        assert!(close(sph_bessel_j(1, 1.0).unwrap(), j1, 1e-14));
        assert!((j1 - 0.301_168_7).abs() < 1e-7);
    }

    #[test]
    fn negative_argument_is_rejected() {
        assert!(sph_bessel_j(0, -1.0).is_err());
        assert!(sph_hankel1(0, 0.0).is_err());
    }

    #[test]
    fn hankel_closed_forms() {
        let r = 1.0;
        let i = Complex64::i();
        let h0 = sph_hankel1(0, r).unwrap();
        let want0 = -i * (i * r).exp() / r;
        assert!((h0 - want0).norm() < 1e-15);
        assert!((h0 - Complex64::new(0.841_471, -0.540_302)).norm() < 1e-6);
        let h1 = sph_hankel1(1, r).unwrap();
        let want1 = -(i * r).exp() * (1.0 + i / r) / r;
        assert!((h1 - want1).norm() < 1e-14);
    }

    #[test]
    fn wronskian() {
        // j_l y_{l+1} - j_{l+1} y_l = -1/r^2 is equivalent to j y' - j' y = 1/r^2
        for &r in &[0.3, 1.0, 7.5, 40.0] {
            let j = sph_bessel_j_seq(12, r).unwrap();
            let y = sph_bessel_y_seq(12, r).unwrap();
            for l in 0..12 {
                let w = j[l] * y[l + 1] - j[l + 1] * y[l];
                assert!(close(w, -1.0 / (r * r), 1e-9), "l={l} r={r} w={w}");
            }
        }
    }

    #[test]
    fn large_argument_modulus() {
        let h = sph_hankel1(2, 50.0).unwrap();
        assert!((h.norm() * 50.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn downward_and_series_agree_across_switchover() {
        // Miller region (l > r) against the power series evaluated at r >= 1,
        // where the series still converges but is not the production path.
        for &r in &[1.0, 2.5, 6.0] {
            let seq = sph_bessel_j_seq(30, r).unwrap();
            for l in 0..=30 {
                let s = j_series(l, r);
                assert!(close(seq[l], s, 1e-11), "l={l} r={r}: {} vs {}", seq[l], s);
            }
        }
    }

    #[test]
    fn recurrence_residual() {
        let mut r = 0.1;
        while r <= 50.0 {
            let j = sph_bessel_j_seq(21, r).unwrap();
            for l in 1..=20 {
                let lhs = j[l - 1] + j[l + 1];
                let rhs = (2 * l + 1) as f64 / r * j[l];
                let scale = j[l - 1].abs().max(j[l + 1].abs()).max(rhs.abs());
                assert!((lhs - rhs).abs() <= 1e-10 * scale, "l={l} r={r}");
            }
            r *= 1.37;
        }
    }

    #[test]
    fn high_order_at_moderate_argument() {
        // j_64(100) and j_64(10) stay finite and match single-order evaluation
        for &r in &[10.0, 64.0, 100.0] {
            let seq = sph_bessel_j_seq(64, r).unwrap();
            assert!(seq.iter().all(|v| v.is_finite()));
            assert!(close(seq[64], sph_bessel_j(64, r).unwrap(), 1e-13));
        }
    }
}
