//! JSON report schemas. Infinite values are written as `null`.

use std::collections::BTreeMap;

use serde::Serialize;
use wavefocus_core::design::{Design, Verification};
use wavefocus_core::forward::BoundReport;
use wavefocus_core::particles::ValidityReport;

use crate::bundle::FileRecord;
use crate::error::CliError;

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRef {
    pub index: usize,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationJson {
    pub applied: bool,
    pub attempts: usize,
    pub delta: f64,
    pub distance: f64,
    pub initial_min_denominator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySummary {
    pub max_density: f64,
    pub negative_count: usize,
    pub max_imaginary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub max_abs_q: f64,
    pub min_denominator: f64,
    pub argmin_node: NodeRef,
    pub clip_bound: f64,
    pub clipped_count: usize,
    pub perturbation_applied: bool,
    pub perturbation: PerturbationJson,
    pub seeds: BTreeMap<&'static str, u64>,
    /// `sqrt(Σ_{L < ℓ ≤ 40} |f_ℓm|²)`.
    pub truncation_floor: f64,
    /// `‖f_L − A_h‖` predicted from the final `h` coefficients.
    pub predicted_misfit: f64,
    pub h_norm: f64,
    pub h_raw_norm: f64,
    pub density: DensitySummary,
    pub ball_grid: [usize; 3],
}

impl DesignReport {
    pub fn new(d: &Design, predicted_misfit: f64, clip_bound: f64) -> Self {
        let pot = &d.potential;
        let grid = &pot.potential.grid;
        let (r, theta, phi) = grid.spherical(pot.argmin_node);
        let dens = &d.particles.density;
        let (nr, nt, np) = grid.dims();
        Self {
            max_abs_q: d.max_abs_q(),
            min_denominator: pot.min_denominator,
            argmin_node: NodeRef {
                index: pot.argmin_node,
                r,
                theta,
                phi,
            },
            clip_bound,
            clipped_count: d.synthesis.h.clipped_count(),
            perturbation_applied: pot.perturbation.applied,
            perturbation: PerturbationJson {
                applied: pot.perturbation.applied,
                attempts: pot.perturbation.attempts,
                delta: pot.perturbation.delta,
                distance: pot.perturbation.distance,
                initial_min_denominator: pot.perturbation.initial_min_denominator,
            },
            seeds: BTreeMap::from([("perturbation", pot.perturbation.seed)]),
            truncation_floor: d.synthesis.truncation_floor,
            predicted_misfit,
            h_norm: pot.h.l2_norm(),
            h_raw_norm: d.synthesis.h_raw.l2_norm(),
            density: DensitySummary {
                max_density: dens.max_density(),
                negative_count: dens.negative_count(),
                max_imaginary: dens.max_imaginary,
            },
            ball_grid: [nr, nt, np],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityJson {
    pub k0: f64,
    pub particle_radius: f64,
    /// `null` when the density vanishes.
    pub d_min: Option<f64>,
    pub k0a: f64,
    pub a_over_d: f64,
    pub volume_fraction: f64,
    pub k0a_threshold: f64,
    pub a_over_d_threshold: f64,
    pub status: &'static str,
}

impl From<&ValidityReport> for ValidityJson {
    fn from(v: &ValidityReport) -> Self {
        Self {
            k0: v.k0,
            particle_radius: v.particle_radius,
            d_min: finite(v.d_min),
            k0a: v.k0a,
            a_over_d: v.a_over_d,
            volume_fraction: v.volume_fraction,
            k0a_threshold: v.thresholds.k0a,
            a_over_d_threshold: v.thresholds.a_over_d,
            status: if v.pass { "PASS" } else { "FAIL" },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundJson {
    pub misfit: f64,
    pub eps_h: f64,
    pub slack: f64,
    pub volume: f64,
    pub bound: f64,
    pub single_eps_bound: f64,
    pub status: &'static str,
}

impl From<&BoundReport> for BoundJson {
    fn from(b: &BoundReport) -> Self {
        Self {
            misfit: b.misfit,
            eps_h: b.eps_h,
            slack: b.slack,
            volume: b.volume,
            bound: b.bound,
            single_eps_bound: b.single_eps_bound,
            status: if b.pass { "PASS" } else { "FAIL" },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub l2_misfit: f64,
    pub relative_misfit: f64,
    pub target_norm: f64,
    pub bound_report: BoundJson,
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub axisymmetric_solve: bool,
    /// `‖q u_q − h‖_{L²(D)} / ‖h‖_{L²(D)}`.
    pub construction_error: f64,
    pub amplitude_norm: f64,
    pub max_abs_q: f64,
    /// `null` without a cone target or for a vanishing amplitude.
    pub in_cone_fraction: Option<f64>,
    pub isotropic_fraction: Option<f64>,
    pub peak_direction: Option<Direction>,
}

impl VerificationReport {
    pub fn new(v: &Verification, max_abs_q: f64, isotropic: Option<f64>) -> Self {
        Self {
            l2_misfit: v.misfit.l2_misfit,
            relative_misfit: v.misfit.relative,
            target_norm: v.misfit.target_norm,
            bound_report: (&v.bound).into(),
            residual: v.field.residual,
            iterations: v.field.iterations,
            residual_history: v.field.residual_history.clone(),
            axisymmetric_solve: v.field.axisymmetric,
            construction_error: v.construction_error,
            amplitude_norm: v.amplitude_norm,
            max_abs_q,
            in_cone_fraction: v.focusing.as_ref().map(|f| f.in_cone_fraction),
            isotropic_fraction: isotropic,
            peak_direction: v.focusing.as_ref().map(|f| Direction {
                theta: f.peak_direction.0,
                phi: f.peak_direction.1,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorJson {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    /// Present for solver failures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_history: Option<Vec<f64>>,
}

impl From<&CliError> for ErrorJson {
    fn from(e: &CliError) -> Self {
        let residual_history = match e {
            CliError::Core(wavefocus_core::Error::SolverDiverged { residual_history, .. }) => {
                Some(residual_history.clone())
            }
            _ => None,
        };
        Self {
            kind: e.kind(),
            exit_code: e.exit_code(),
            message: e.to_string(),
            residual_history,
        }
    }
}

/// Run manifest: what ran, on what, and every file written with its hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    /// `OK` or `FAILED`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorJson>,
    pub deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub seeds: BTreeMap<&'static str, u64>,
    /// Wall-clock seconds per stage; omitted in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_s: Option<BTreeMap<&'static str, f64>>,
    /// Files read, with hashes.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<FileRecord>,
    pub files: Vec<FileRecord>,
}
