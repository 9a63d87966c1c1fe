//! The design pipeline end to end, and its independent verification.
//!
//! 1. Expand the target, invert the moment relation for `h`, clip.
//! 2. Volume potential, denominator check (perturbing `h` if needed), `q`.
//! 3. Particle density and regime diagnostics.
//!
//! Each stage is a separate function so callers can keep whatever finished
//! before a failure.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::ballgrid::BallGrid;
use crate::error::{config, Error, Result};
use crate::forward::{
    amplitude_coefficients, bound_report, focusing_metrics, ls_solve, misfit, scattering_amplitude, BoundReport,
    FocusingMetrics, Misfit, SolverOptions, TotalField,
};
use crate::particles::{
    background_potential, density_from_potential, validity_report, CapacitanceModel, ParticleDensityField,
    ValidityReport, ValidityThresholds,
};
use crate::potential::{
    check_denominator, perturb_h, reconstruct_q, volume_potential_with, PerturbationSpec, PotentialField, RadialKernel,
    DEFAULT_DENOMINATOR_FLOOR, DEFAULT_PERTURBATION_BUDGET,
};
use crate::sphergrid::{cone_coefficients, synthesize, tail_energy, ShCoefficients, SphereField, SphereGrid};
use crate::synthesis::{clip_coeffs, predicted_amplitude_with, solve_h_coeffs_with, HExpansion, MomentTable};

/// Band at which the truncation floor of a cone target is evaluated.
pub const TAIL_BAND: usize = 40;

/// What the far field should look like.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `amplitude` on `θ_lo ≤ θ ≤ θ_hi`, zero elsewhere.
    Cone {
        theta_lo: f64,
        theta_hi: f64,
        amplitude: Complex64,
    },
    /// Coefficients given directly; treated as exact (no truncation tail).
    Coefficients(ShCoefficients),
}

/// Seeded search used when the denominator degenerates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationParams {
    /// Budget `δ` relative to `‖h‖_{L²(D)}`.
    pub relative_delta: f64,
    pub seed: u64,
    pub budget: usize,
}

impl Default for PerturbationParams {
    fn default() -> Self {
        Self {
            relative_delta: 0.05,
            seed: 0,
            budget: DEFAULT_PERTURBATION_BUDGET,
        }
    }
}

/// Every numerical choice of a design run.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub k: f64,
    pub alpha: [f64; 3],
    pub band: usize,
    /// Clipping bound `T`; `None` disables clipping.
    pub clip_bound: Option<f64>,
    pub support_radius: f64,
    /// `(n_r, n_θ, n_φ)` of the ball grid.
    pub ball_dims: (usize, usize, usize),
    /// `(n_θ, n_φ)` of the verification sphere grid.
    pub sphere_dims: (usize, usize),
    pub denominator_floor: f64,
    pub perturbation: PerturbationParams,
    pub capacitance: CapacitanceModel,
    /// Constant background refraction coefficient `n0`.
    pub n0: f64,
    pub thresholds: ValidityThresholds,
    pub solver: SolverOptions,
}

impl DesignParams {
    /// Defaults of a band-`L` run at `k = 1` on the unit ball.
    pub fn new(band: usize, clip_bound: Option<f64>) -> Self {
        Self {
            k: 1.0,
            alpha: [0.0, 0.0, 1.0],
            band,
            clip_bound,
            support_radius: 1.0,
            ball_dims: (24, 24, 48),
            sphere_dims: (2 * band + 2, 4 * band + 4),
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
            perturbation: PerturbationParams::default(),
            capacitance: CapacitanceModel::soft(0.01, 0.01).expect("positive constants"),
            n0: 1.0,
            thresholds: ValidityThresholds::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(config("k must be positive"));
        }
        let n = (self.alpha[0].powi(2) + self.alpha[1].powi(2) + self.alpha[2].powi(2)).sqrt();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(config("alpha must be a unit vector"));
        }
        if let Some(t) = self.clip_bound {
            if !(t > 0.0) {
                return Err(config("T must be positive"));
            }
        }
        if !(self.support_radius > 0.0) {
            return Err(config("b must be positive"));
        }
        let (nr, nt, np) = self.ball_dims;
        if nr == 0 || nt == 0 || np == 0 {
            return Err(config("ball grid dimensions must be positive"));
        }
        let (st, sp) = self.sphere_dims;
        if st <= self.band || sp <= 2 * self.band {
            return Err(config("sphere grid cannot resolve the band limit"));
        }
        if !(self.denominator_floor > 0.0) {
            return Err(config("denominator floor must be positive"));
        }
        if !(self.perturbation.relative_delta > 0.0) {
            return Err(config("perturbation delta must be positive"));
        }
        if !(self.solver.tol > 0.0) || self.solver.restart == 0 {
            return Err(config("solver tolerance and restart must be positive"));
        }
        Ok(())
    }

    pub fn ball_grid(&self) -> Result<BallGrid> {
        let (nr, nt, np) = self.ball_dims;
        BallGrid::new(self.support_radius, nr, nt, np)
    }

    pub fn sphere_grid(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.sphere_dims.0, self.sphere_dims.1)
    }
}

/// Step 1: target coefficients and the auxiliary source.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisStage {
    /// `f_ℓm` for `ℓ ≤ L`.
    pub target: ShCoefficients,
    /// `sqrt(Σ_{L < ℓ ≤ 40} |f_ℓm|²)`; zero for coefficient targets.
    pub truncation_floor: f64,
    /// `h` before clipping.
    pub h_raw: HExpansion,
    /// `h` after clipping, if any.
    pub h: HExpansion,
    pub moments: MomentTable,
}

pub fn synthesis_stage(params: &DesignParams, target: &Target) -> Result<SynthesisStage> {
    params.validate()?;
    let (f, floor) = match target {
        Target::Cone {
            theta_lo,
            theta_hi,
            amplitude,
        } => {
            let full = cone_coefficients(*theta_lo, *theta_hi, *amplitude, TAIL_BAND.max(params.band))?;
            (full.truncated(params.band), tail_energy(&full, params.band))
        }
        Target::Coefficients(c) => (c.truncated(params.band), tail_energy(c, params.band)),
    };
    let moments = MomentTable::new(params.band, params.k, params.support_radius)?;
    let h_raw = solve_h_coeffs_with(&f, &moments)?;
    let h = match params.clip_bound {
        Some(t) if t.is_finite() => clip_coeffs(&h_raw, t)?,
        _ => h_raw.clone(),
    };
    Ok(SynthesisStage {
        target: f,
        truncation_floor: floor,
        h_raw,
        h,
        moments,
    })
}

/// How the denominator condition was met.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRecord {
    pub applied: bool,
    pub attempts: usize,
    pub delta: f64,
    pub distance: f64,
    pub seed: u64,
    /// `min |u0 - v|` before any perturbation.
    pub initial_min_denominator: f64,
}

/// Step 2: the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialStage {
    /// The `h` the potential was built from (perturbed if needed).
    pub h: HExpansion,
    pub potential: PotentialField,
    pub min_denominator: f64,
    pub argmin_node: usize,
    pub perturbation: PerturbationRecord,
}

pub fn potential_stage(params: &DesignParams, synth: &SynthesisStage) -> Result<PotentialStage> {
    let grid = params.ball_grid()?;
    let kernel = RadialKernel::for_grid(params.band, params.k, params.support_radius, &grid)?;
    let h0 = &synth.h;
    let v0 = volume_potential_with(&h0.coeffs, &kernel, &grid);
    let (min0, _) = check_denominator(&v0, params.k, params.alpha, &grid);
    let delta = params.perturbation.relative_delta * h0.l2_norm();
    let (h, v, attempts, distance) = if min0 > params.denominator_floor {
        (h0.clone(), v0, 0, 0.0)
    } else {
        let spec = PerturbationSpec {
            delta: if delta > 0.0 {
                delta
            } else {
                params.perturbation.relative_delta
            },
            seed: params.perturbation.seed,
            floor: params.denominator_floor,
            budget: params.perturbation.budget,
        };
        let p = perturb_h(h0, &kernel, params.k, params.alpha, &grid, spec)?;
        (p.h, p.v, p.attempts, p.distance)
    };
    let (min_denominator, argmin_node) = check_denominator(&v, params.k, params.alpha, &grid);
    let potential = reconstruct_q(&h, &v, params.k, params.alpha, &grid, params.denominator_floor)?;
    Ok(PotentialStage {
        h,
        potential,
        min_denominator,
        argmin_node,
        perturbation: PerturbationRecord {
            applied: attempts > 0,
            attempts,
            delta,
            distance,
            seed: params.perturbation.seed,
            initial_min_denominator: min0,
        },
    })
}

/// Step 3: particle density.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleStage {
    pub density: ParticleDensityField,
    pub validity: ValidityReport,
}

pub fn particle_stage(params: &DesignParams, pot: &PotentialStage) -> Result<ParticleStage> {
    let q0 = background_potential(params.k, params.n0, pot.potential.grid.len());
    let mut density = density_from_potential(&pot.potential, &q0, &params.capacitance)?;
    let validity = validity_report(
        &density,
        params.capacitance.particle_radius,
        params.k,
        params.n0,
        params.thresholds,
    )?;
    density.validity = Some(validity);
    Ok(ParticleStage { density, validity })
}

/// All three stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub synthesis: SynthesisStage,
    pub potential: PotentialStage,
    pub particles: ParticleStage,
}

impl Design {
    pub fn max_abs_q(&self) -> f64 {
        self.potential.potential.max_abs_q()
    }
}

pub fn design(params: &DesignParams, target: &Target) -> Result<Design> {
    let synthesis = synthesis_stage(params, target)?;
    let potential = potential_stage(params, &synthesis)?;
    let particles = particle_stage(params, &potential)?;
    Ok(Design {
        synthesis,
        potential,
        particles,
    })
}

/// Result of checking a potential by an independent forward solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub field: TotalField,
    /// Attained amplitude on the verification sphere grid.
    pub amplitude: SphereField,
    /// Band-`L` target on the same grid.
    pub target: SphereField,
    pub misfit: Misfit,
    pub bound: BoundReport,
    /// `‖q u_q - h‖_{L²(D)} / ‖h‖_{L²(D)}`.
    pub construction_error: f64,
    /// Present when the amplitude does not vanish and a cone is known.
    pub focusing: Option<FocusingMetrics>,
    /// `‖A‖_{L²(S²)}`.
    pub amplitude_norm: f64,
}

/// Solve for `u_q`, form `A_q` and compare with the band-`L` target.
///
/// `h` is the source the potential was built from; `h = 0` is fine when
/// checking an arbitrary potential.
pub fn verify(
    params: &DesignParams,
    target: &ShCoefficients,
    h: &HExpansion,
    potential: &PotentialField,
    cone: Option<(f64, f64)>,
) -> Result<Verification> {
    params.validate()?;
    let sphere = params.sphere_grid()?;
    let field = ls_solve(potential, params.k, params.alpha, &params.solver)?;
    let amplitude = scattering_amplitude(potential, &field, params.k, &sphere);
    let target_field = synthesize(target, &sphere);
    let m = misfit(&target_field, &amplitude)?;

    let grid = &potential.grid;
    let h_values = &potential.h_values;
    let diff: Vec<Complex64> = potential
        .q_values
        .iter()
        .zip(&field.u_values)
        .zip(h_values)
        .map(|((q, u), h)| q * u - h)
        .collect();
    let slack = grid.l2_norm(&diff);
    let h_norm = grid.l2_norm(h_values);
    // ‖f - A_h‖: A_h is band-L and exact through the moment factors
    let moments = MomentTable::new(h.band().max(target.band()), params.k, h.support_radius)?;
    let a_h = predicted_amplitude_with(h, &moments);
    let band = a_h.band().max(target.band());
    let (ta, tf) = (a_h.truncated(band), target.truncated(band));
    let eps_h = ta
        .as_slice()
        .iter()
        .zip(tf.as_slice())
        .map(|(a, f)| (a - f).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let bound = bound_report(&m, eps_h, slack, grid.volume());

    let amplitude_norm = amplitude.l2_norm();
    let focusing = match cone {
        Some((lo, hi)) if amplitude_norm > 0.0 => Some(focusing_metrics(&amplitude, lo, hi)?),
        _ => None,
    };
    Ok(Verification {
        field,
        amplitude,
        target: target_field,
        misfit: m,
        bound,
        construction_error: if h_norm > 0.0 { slack / h_norm } else { slack },
        focusing,
        amplitude_norm,
    })
}

/// Coefficients of the attained amplitude up to `band`, from the solved field.
pub fn attained_coefficients(
    potential: &PotentialField,
    field: &TotalField,
    k: f64,
    band: usize,
) -> Result<ShCoefficients> {
    let src: Vec<Complex64> = potential
        .q_values
        .iter()
        .zip(&field.u_values)
        .map(|(q, u)| q * u)
        .collect();
    amplitude_coefficients(&potential.grid, &src, k, band)
}

/// `Error` variants a design can legitimately end in, for reporting.
pub fn is_design_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateDenominator { .. } | Error::PerturbationExhausted { .. } | Error::MomentUnderflow { .. }
    )
}

/// Isotropic baseline of a cone's energy fraction.
pub fn isotropic_fraction(theta_lo: f64, theta_hi: f64) -> f64 {
    (theta_lo.cos() - theta_hi.cos()) / 2.0
}
