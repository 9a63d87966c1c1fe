//! Independent check of a design: solve `u = u0 - ∫_D g q u` for the
//! reconstructed `q`, form the scattering amplitude and compare it with the
//! target.

mod gmres;
mod operator;

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

pub use gmres::{gmres, GmresOptions, GmresOutcome};
pub use operator::{cell_kernel, LsOperator, MEMORY_LIMIT_BYTES};

use crate::ballgrid::BallGrid;
use crate::error::{config, domain, Error, Result};
use crate::potential::PotentialField;
use crate::specfun::{gauss_legendre, normalized_legendre_table, sph_bessel_j_seq_unchecked, tri_index};
use crate::sphergrid::{analyze, check_cone, ShCoefficients, SphereField, SphereGrid};

/// Solver settings for [`ls_solve`].
pub type SolverOptions = GmresOptions;

/// The scattering solution on the grid of the potential it was solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalField {
    pub u_values: Vec<Complex64>,
    /// Final relative residual of the discrete equation.
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Whether the `m = 0` reduced system was used.
    pub axisymmetric: bool,
}

/// Relative spread below which a ring is treated as constant in `φ`.
const RING_TOLERANCE: f64 = 1e-13;

fn ring_means(values: &[Complex64], n_phi: usize) -> Option<Vec<Complex64>> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut means = Vec::with_capacity(values.len() / n_phi);
    for ring in values.chunks(n_phi) {
        let mean = ring.iter().sum::<Complex64>() / n_phi as f64;
        if ring.iter().any(|v| (v - mean).norm() > RING_TOLERANCE * scale) {
            return None;
        }
        means.push(mean);
    }
    Some(means)
}

/// Solve the Lippmann–Schwinger equation with the plane wave `e^{ikα·x}`.
pub fn ls_solve(q: &PotentialField, k: f64, alpha: [f64; 3], opts: &SolverOptions) -> Result<TotalField> {
    let rhs = q.grid.plane_wave(k, alpha);
    ls_solve_rhs(q, k, &rhs, opts)
}

/// Solve `u + ∫_D g q u = rhs` for an arbitrary right-hand side.
///
/// If both `q` and `rhs` are constant on every ring, only the `m = 0` block is
/// assembled and solved. A first failure to converge is retried once from
/// the current iterate with twice the Krylov dimension.
pub fn ls_solve_rhs(q: &PotentialField, k: f64, rhs: &[Complex64], opts: &SolverOptions) -> Result<TotalField> {
    validate(q, k, rhs, opts)?;
    if q.q_values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(TotalField {
            u_values: rhs.to_vec(),
            residual: 0.0,
            iterations: 0,
            residual_history: alloc::vec![0.0],
            axisymmetric: false,
        });
    }
    let n_phi = q.grid.n_phi();
    let axis = match (ring_means(&q.q_values, n_phi), ring_means(rhs, n_phi)) {
        (Some(qm), Some(rm)) if n_phi > 1 => Some((qm, rm)),
        _ => None,
    };
    let op = if axis.is_some() {
        LsOperator::axisymmetric(&q.grid, k)?
    } else {
        LsOperator::new(&q.grid, k)?
    };
    ls_solve_with(&op, q, rhs, opts, axis)
}

fn validate(q: &PotentialField, k: f64, rhs: &[Complex64], opts: &SolverOptions) -> Result<()> {
    if !(k > 0.0) {
        return Err(domain("wavenumber must be positive"));
    }
    if !(opts.tol > 0.0) {
        return Err(config("solver tolerance must be positive"));
    }
    if rhs.len() != q.grid.len() || q.q_values.len() != q.grid.len() {
        return Err(domain("field length does not match the ball grid"));
    }
    Ok(())
}

fn ls_solve_with(
    op: &LsOperator,
    q: &PotentialField,
    rhs: &[Complex64],
    opts: &SolverOptions,
    axis: Option<(Vec<Complex64>, Vec<Complex64>)>,
) -> Result<TotalField> {
    let n_phi = q.grid.n_phi();
    let run = |x0: Vec<Complex64>, o: &SolverOptions| -> GmresOutcome {
        match &axis {
            Some((qm, rm)) => gmres(|x, y| op.apply_reduced(qm, x, y), rm, x0, o),
            None => {
                let n = rhs.len();
                let mut w = alloc::vec![Complex64::new(0.0, 0.0); n];
                gmres(
                    |x, y| {
                        for ((wi, qi), xi) in w.iter_mut().zip(&q.q_values).zip(x) {
                            *wi = qi * xi;
                        }
                        op.apply_kernel(&w, y);
                        for (yi, xi) in y.iter_mut().zip(x) {
                            *yi += xi;
                        }
                    },
                    rhs,
                    x0,
                    o,
                )
            }
        }
    };
    let x0 = match &axis {
        Some((_, rm)) => rm.clone(),
        None => rhs.to_vec(),
    };
    let mut out = run(x0, opts);
    if !out.converged {
        let retry = SolverOptions {
            restart: opts.restart * 2,
            ..*opts
        };
        let mut second = run(out.x.clone(), &retry);
        let mut history = out.residual_history;
        let last = *history.last().unwrap_or(&f64::INFINITY);
        history.extend(second.residual_history.iter().map(|r| r.min(last)));
        second.iterations += out.iterations;
        second.residual_history = history;
        out = second;
    }
    if !out.converged {
        return Err(Error::SolverDiverged {
            iterations: out.iterations,
            residual_history: out.residual_history,
        });
    }
    let residual = *out.residual_history.last().unwrap_or(&0.0);
    let u_values = match &axis {
        Some(_) => out.x.iter().flat_map(|v| core::iter::repeat_n(*v, n_phi)).collect(),
        None => out.x,
    };
    Ok(TotalField {
        u_values,
        residual,
        iterations: out.iterations,
        residual_history: out.residual_history,
        axisymmetric: axis.is_some(),
    })
}

/// `‖rhs - (u + K q u)‖ / ‖rhs‖` evaluated with the full operator.
pub fn discrete_residual(q: &PotentialField, k: f64, rhs: &[Complex64], u: &[Complex64]) -> Result<f64> {
    let op = LsOperator::new(&q.grid, k)?;
    let w: Vec<Complex64> = q.q_values.iter().zip(u).map(|(a, b)| a * b).collect();
    let mut y = alloc::vec![Complex64::new(0.0, 0.0); u.len()];
    op.apply_kernel(&w, &mut y);
    let num: f64 = rhs
        .iter()
        .zip(u)
        .zip(&y)
        .map(|((r, u), y)| (r - u - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = rhs.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    Ok(if den == 0.0 { num } else { num / den })
}

/// `A(β) = -(1/4π) ∫_D e^{-ikβ·x} q u dx` at every node of `sphere`, in the
/// physical directions of its (possibly rotated) frame.
pub fn scattering_amplitude(q: &PotentialField, u: &TotalField, k: f64, sphere: &SphereGrid) -> SphereField {
    let grid = &q.grid;
    let src: Vec<Complex64> = q
        .q_values
        .iter()
        .zip(&u.u_values)
        .zip(grid.weights())
        .map(|((q, u), w)| q * u * (-w / (4.0 * PI)))
        .collect();
    let values = (0..sphere.len())
        .map(|i| {
            let b = sphere.direction(i);
            grid.points()
                .iter()
                .zip(&src)
                .map(|(x, s)| s * Complex64::from_polar(1.0, -k * (b[0] * x[0] + b[1] * x[1] + b[2] * x[2])))
                .sum()
        })
        .collect();
    SphereField {
        grid: sphere.clone(),
        values,
    }
}

/// Spherical-harmonic coefficients of the amplitude of a source sampled on
/// a ball grid, via `e^{-ikβ·x} = 4π Σ (-i)^ℓ j_ℓ(kr) Y_ℓm(β) conj(Y_ℓm(x̂))`.
///
/// `band` is capped at what the grid's angular rule resolves.
pub fn amplitude_coefficients(grid: &BallGrid, source: &[Complex64], k: f64, band: usize) -> Result<ShCoefficients> {
    if source.len() != grid.len() {
        return Err(domain("source length does not match the ball grid"));
    }
    let (n_r, n_theta, n_phi) = grid.dims();
    let shell = SphereGrid::new(n_theta, n_phi)?;
    let band = band.min(shell.max_band());
    let n_ang = n_theta * n_phi;
    let mut out = ShCoefficients::zeros(band);
    for ir in 0..n_r {
        let field = SphereField {
            grid: shell.clone(),
            values: source[ir * n_ang..(ir + 1) * n_ang].to_vec(),
        };
        let c = analyze(&field, band)?;
        let j = sph_bessel_j_seq_unchecked(band, k * grid.radii()[ir]);
        let rw = grid.radial_weights()[ir];
        for (slot, (l, _, v)) in out.as_mut_slice().iter_mut().zip(c.iter()) {
            let phase = match l % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            *slot -= v * phase * (rw * j[l]);
        }
    }
    Ok(out)
}

/// `‖f - A‖` and the relative misfit on a shared sphere grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misfit {
    pub l2_misfit: f64,
    pub relative: f64,
    pub target_norm: f64,
}

pub fn misfit(target: &SphereField, attained: &SphereField) -> Result<Misfit> {
    if target.grid != attained.grid || target.values.len() != attained.values.len() {
        return Err(domain("misfit needs both fields on the same sphere grid"));
    }
    let diff: Vec<Complex64> = target.values.iter().zip(&attained.values).map(|(f, a)| f - a).collect();
    let l2 = target.grid.norm_sq(&diff).sqrt();
    let fnorm = target.l2_norm();
    Ok(Misfit {
        l2_misfit: l2,
        relative: if fnorm > 0.0 { l2 / fnorm } else { l2 },
        target_norm: fnorm,
    })
}

/// How the attained misfit compares with the error chain of the construction.
///
/// `‖f - A_q‖ ≤ ‖f - A_h‖ + ‖A_h - A_q‖` and, by Cauchy–Schwarz,
/// `‖A_h - A_q‖_{L²(S²)} ≤ sqrt(|D| / 4π) ‖h - q u_q‖_{L²(D)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub misfit: f64,
    /// `‖f - A_h‖`, the residual of the `h` stage.
    pub eps_h: f64,
    /// `‖h - q u_q‖_{L²(D)}`.
    pub slack: f64,
    pub volume: f64,
    /// `eps_h + sqrt(|D|/4π) slack`.
    pub bound: f64,
    /// `max(eps_h, slack) (1 + |D|/4π)`, the single-ε form of the bound.
    pub single_eps_bound: f64,
    pub pass: bool,
}

pub fn bound_report(misfit: &Misfit, eps_h: f64, slack: f64, volume: f64) -> BoundReport {
    let bound = eps_h + (volume / (4.0 * PI)).sqrt() * slack;
    let single = eps_h.max(slack) * (1.0 + volume / (4.0 * PI));
    let allowance = 1e-8 * (1.0 + misfit.target_norm);
    BoundReport {
        misfit: misfit.l2_misfit,
        eps_h,
        slack,
        volume,
        bound,
        single_eps_bound: single,
        pass: misfit.l2_misfit <= bound + allowance,
    }
}

/// Focusing summary of an amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusingMetrics {
    pub in_cone_fraction: f64,
    /// `(θ, φ)` of the grid node with the largest `|A|`.
    pub peak_direction: (f64, f64),
}

/// Energy fraction of `A` inside `θ_lo ≤ θ ≤ θ_hi` and its peak direction.
///
/// `A` is expanded to the largest band its grid resolves; the cone integral
/// of that expansion is then exact on a Gauss rule fitted to the cone.
pub fn focusing_metrics(amplitude: &SphereField, theta_lo: f64, theta_hi: f64) -> Result<FocusingMetrics> {
    check_cone(theta_lo, theta_hi)?;
    if amplitude.grid.is_rotated() {
        return Err(config("focusing metrics need an unrotated sphere grid"));
    }
    let coeffs = analyze(amplitude, amplitude.grid.max_band())?;
    let in_cone_fraction = cone_energy_fraction(&coeffs, theta_lo, theta_hi)?;
    let mut peak = (0, -1.0);
    for (i, v) in amplitude.values.iter().enumerate() {
        if v.norm() > peak.1 {
            peak = (i, v.norm());
        }
    }
    let node = amplitude.grid.node(peak.0);
    Ok(FocusingMetrics {
        in_cone_fraction,
        peak_direction: (node.theta, node.phi),
    })
}

/// `∫_cone |A|² / ∫_{S²} |A|²` for a band-limited `A`.
pub fn cone_energy_fraction(coeffs: &ShCoefficients, theta_lo: f64, theta_hi: f64) -> Result<f64> {
    check_cone(theta_lo, theta_hi)?;
    let total: f64 = coeffs.as_slice().iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::UndefinedFraction);
    }
    let band = coeffs.band();
    let rule = gauss_legendre(band + 1)?.mapped(theta_hi.cos(), theta_lo.cos());
    // |A|² integrated over φ = 2π Σ_m |Σ_ℓ c_ℓm P̄_ℓ^{|m|}|²
    let mut inside = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - x * x).max(0.0).sqrt();
        let table = normalized_legendre_table(band, *x, s);
        for m in -(band as i64)..=(band as i64) {
            let am = m.unsigned_abs() as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for l in am..=band {
                acc += coeffs.get(l, m) * table[tri_index(l, am)];
            }
            inside += w * 2.0 * PI * acc.norm_sqr();
        }
    }
    Ok(inside / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphergrid::{cone_target, synthesize};
    use crate::synthesis::{predicted_amplitude, HExpansion};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tight() -> SolverOptions {
        SolverOptions {
            tol: 1e-13,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn zero_potential_returns_incident_field() {
        let g = BallGrid::new(1.0, 4, 4, 8).unwrap();
        let q = PotentialField::from_values(g.clone(), alloc::vec![c(0.0, 0.0); g.len()]).unwrap();
        let u = ls_solve(&q, 1.0, [0.0, 0.0, 1.0], &SolverOptions::default()).unwrap();
        assert_eq!(u.iterations, 0);
        assert_eq!(u.u_values, g.plane_wave(1.0, [0.0, 0.0, 1.0]));
        let s = SphereGrid::for_band(4).unwrap();
        let a = scattering_amplitude(&q, &u, 1.0, &s);
        assert!(a.values.iter().all(|v| *v == c(0.0, 0.0)));
    }

    fn smooth_q(g: &BallGrid, scale: f64) -> Vec<Complex64> {
        g.points()
            .iter()
            .map(|x| c(1.0 + 0.3 * x[0] - 0.2 * x[1] * x[2], 0.5 * x[2]) * scale)
            .collect()
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let g = BallGrid::new(1.0, 6, 6, 10).unwrap();
        let q = PotentialField::from_values(g.clone(), smooth_q(&g, 2.0)).unwrap();
        let u_star: Vec<Complex64> = g
            .points()
            .iter()
            .map(|x| c((x[0] + 0.5 * x[2]).cos(), x[1] * x[1]))
            .collect();
        let op = LsOperator::new(&g, 1.0).unwrap();
        let w: Vec<Complex64> = q.q_values.iter().zip(&u_star).map(|(a, b)| a * b).collect();
        let mut f = alloc::vec![c(0.0, 0.0); g.len()];
        op.apply_kernel(&w, &mut f);
        for (fi, ui) in f.iter_mut().zip(&u_star) {
            *fi += ui;
        }
        let opts = SolverOptions {
            tol: 1e-11,
            ..SolverOptions::default()
        };
        let u = ls_solve_rhs(&q, 1.0, &f, &opts).unwrap();
        assert!(!u.axisymmetric);
        let err: f64 = u
            .u_values
            .iter()
            .zip(&u_star)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = u_star.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-9, "{}", err / norm);
        assert!(u.residual <= 1e-11);
        assert!(u.residual_history.windows(2).all(|w| w[1] <= w[0]));
        let r = discrete_residual(&q, 1.0, &f, &u.u_values).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn born_error_is_second_order() {
        let g = BallGrid::new(1.0, 5, 5, 8).unwrap();
        let op = LsOperator::new(&g, 1.0).unwrap();
        let u0 = g.plane_wave(1.0, [0.0, 0.0, 1.0]);
        let mut errs = Vec::new();
        for scale in [1e-3, 1e-2] {
            let q = PotentialField::from_values(g.clone(), smooth_q(&g, scale)).unwrap();
            let u = ls_solve(&q, 1.0, [0.0, 0.0, 1.0], &tight()).unwrap();
            let w: Vec<Complex64> = q.q_values.iter().zip(&u0).map(|(a, b)| a * b).collect();
            let mut ku = alloc::vec![c(0.0, 0.0); g.len()];
            op.apply_kernel(&w, &mut ku);
            let err: f64 = u
                .u_values
                .iter()
                .zip(&u0)
                .zip(&ku)
                .map(|((u, u0), k)| (u - (u0 - k)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let n0: f64 = u0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            errs.push(err / n0);
        }
        let order = (errs[1] / errs[0]).log10();
        assert!(order >= 1.8, "errors {errs:?}, order {order}");
        assert!(errs[0] < 1e-5);
    }

    #[test]
    fn axisymmetric_path_matches_full_operator() {
        let g = BallGrid::new(1.0, 5, 5, 8).unwrap();
        let vals: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let (r, t, _) = g.spherical(i);
                c(3.0 + r * t.cos(), -r)
            })
            .collect();
        let q = PotentialField::from_values(g.clone(), vals).unwrap();
        let a = ls_solve(&q, 1.0, [0.0, 0.0, 1.0], &tight()).unwrap();
        assert!(a.axisymmetric);
        let op = LsOperator::new(&g, 1.0).unwrap();
        let axis = None;
        let b = ls_solve_with(&op, &q, &g.plane_wave(1.0, [0.0, 0.0, 1.0]), &tight(), axis).unwrap();
        for (x, y) in a.u_values.iter().zip(&b.u_values) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn divergence_is_reported_with_history() {
        let g = BallGrid::new(1.0, 4, 4, 6).unwrap();
        let q = PotentialField::from_values(g.clone(), smooth_q(&g, 50.0)).unwrap();
        let opts = SolverOptions {
            tol: 1e-14,
            restart: 2,
            max_iter: 4,
        };
        match ls_solve(&q, 1.0, [1.0, 0.0, 0.0], &opts) {
            Err(Error::SolverDiverged { residual_history, .. }) => {
                assert!(!residual_history.is_empty());
                assert!(residual_history.windows(2).all(|w| w[1] <= w[0]));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn amplitude_norm_is_rotation_invariant() {
        let g = BallGrid::new(1.0, 6, 6, 12).unwrap();
        let q = PotentialField::from_values(g.clone(), smooth_q(&g, 0.5)).unwrap();
        let u = ls_solve(&q, 1.0, [0.0, 0.0, 1.0], &SolverOptions::default()).unwrap();
        let s = SphereGrid::for_band(8).unwrap();
        let (ca, sa) = (0.7f64.cos(), 0.7f64.sin());
        let (cb, sb) = (1.9f64.cos(), 1.9f64.sin());
        // Rz(1.9) Rx(0.7)
        let rot = [[cb, -sb * ca, sb * sa], [sb, cb * ca, -cb * sa], [0.0, sa, ca]];
        let a = scattering_amplitude(&q, &u, 1.0, &s).l2_norm();
        let b = scattering_amplitude(&q, &u, 1.0, &s.clone().with_rotation(rot)).l2_norm();
        assert!((a - b).abs() < 1e-8 * a, "{a} vs {b}");
    }

    #[test]
    fn amplitude_coefficients_agree_with_direct_sum() {
        let g = BallGrid::new(1.0, 6, 8, 16).unwrap();
        let q = PotentialField::from_values(g.clone(), smooth_q(&g, 1.0)).unwrap();
        let u = TotalField {
            u_values: g.plane_wave(1.0, [0.0, 0.0, 1.0]),
            residual: 0.0,
            iterations: 0,
            residual_history: Vec::new(),
            axisymmetric: false,
        };
        let src: Vec<Complex64> = q.q_values.iter().zip(&u.u_values).map(|(a, b)| a * b).collect();
        let coeffs = amplitude_coefficients(&g, &src, 1.0, 7).unwrap();
        let s = SphereGrid::for_band(7).unwrap();
        let direct = scattering_amplitude(&q, &u, 1.0, &s);
        let via = synthesize(&coeffs, &s);
        let m = misfit(&direct, &via).unwrap();
        assert!(m.relative < 1e-8, "{}", m.relative);
    }

    #[test]
    fn amplitude_of_designed_source_matches_prediction() {
        let mut coeffs = ShCoefficients::zeros(3);
        for (i, v) in coeffs.as_mut_slice().iter_mut().enumerate() {
            *v = c((i as f64).sin(), (2.0 * i as f64).cos());
        }
        let h = HExpansion::new(coeffs, 1.0);
        let g = BallGrid::new(1.0, 12, 8, 16).unwrap();
        let vals = crate::synthesis::evaluate_on_grid(&h, &g);
        let pred = predicted_amplitude(&h, 1.0).unwrap();
        let got = amplitude_coefficients(&g, &vals, 1.0, 3).unwrap();
        let diff: f64 = pred
            .as_slice()
            .iter()
            .zip(got.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-10 * pred.norm(), "{diff}");
    }

    #[test]
    fn misfit_examples() {
        let s = SphereGrid::for_band(12).unwrap();
        let f = cone_target(0.0, PI / 4.0, c(1.0, 0.0), &s).unwrap();
        let zero = SphereField::zeros(s.clone());
        let m = misfit(&f, &f).unwrap();
        assert_eq!(m.l2_misfit, 0.0);
        // the grid norm of an indicator only approximates the cap area
        let m = misfit(&f, &zero).unwrap();
        let want = (2.0 * PI * (1.0 - (PI / 4.0).cos())).sqrt();
        assert!((m.l2_misfit - want).abs() < 0.1 * want);
        let fine = SphereGrid::new(400, 4).unwrap();
        let f = cone_target(0.0, PI / 4.0, c(1.0, 0.0), &fine).unwrap();
        let m = misfit(&f, &SphereField::zeros(fine)).unwrap();
        assert!((m.l2_misfit - 1.35591).abs() < 2e-2, "{}", m.l2_misfit);
    }

    #[test]
    fn bound_report_passes_and_fails() {
        let m = Misfit {
            l2_misfit: 0.1,
            relative: 0.1,
            target_norm: 1.0,
        };
        let v = 4.0 * PI / 3.0;
        let r = bound_report(&m, 0.05, 0.1, v);
        assert!((r.bound - (0.05 + (1.0f64 / 3.0).sqrt() * 0.1)).abs() < 1e-15);
        assert!(r.pass);
        assert!((r.single_eps_bound - 0.1 * (4.0 / 3.0)).abs() < 1e-15);
        assert!(!bound_report(&m, 0.01, 0.01, v).pass);
    }

    #[test]
    fn isotropic_fraction_is_solid_angle_ratio() {
        let s = SphereGrid::for_band(6).unwrap();
        let mut coeffs = ShCoefficients::zeros(0);
        coeffs.set(0, 0, c(1.0, 0.0));
        let a = synthesize(&coeffs, &s);
        let m = focusing_metrics(&a, 0.0, PI / 4.0).unwrap();
        let want = (1.0 - (PI / 4.0).cos()) / 2.0;
        assert!((m.in_cone_fraction - want).abs() < 1e-12);
        assert!((want - 0.14645).abs() < 1e-5);
        let full = focusing_metrics(&a, 0.0, PI).unwrap();
        assert!((full.in_cone_fraction - 1.0).abs() < 1e-12);
        let zero = SphereField::zeros(s);
        assert_eq!(focusing_metrics(&zero, 0.0, 1.0), Err(Error::UndefinedFraction));
    }

    #[test]
    fn peak_direction_follows_the_lobe() {
        let s = SphereGrid::for_band(8).unwrap();
        let mut coeffs = ShCoefficients::zeros(8);
        for l in 0..=8 {
            coeffs.set(l, 0, c(((2 * l + 1) as f64).sqrt(), 0.0));
        }
        let a = synthesize(&coeffs, &s);
        let m = focusing_metrics(&a, 0.0, PI / 4.0).unwrap();
        assert!(m.peak_direction.0 < 0.3);
        assert!(m.in_cone_fraction > 2.0 * 0.14645);
    }
}
