//! Run configuration: a TOML file with a fixed schema (see `docs/config.md`).
//!
//! Unknown keys are errors so a typo in `T` or `L` cannot silently fall back
//! to a default. `T` has no default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefocus_core::design::{DesignParams, PerturbationParams, Target};
use wavefocus_core::forward::SolverOptions;
use wavefocus_core::particles::{CapacitanceModel, ValidityThresholds};
use wavefocus_core::{Complex64, ShCoefficients};

use crate::bundle::read_coefficients;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "z_axis")]
    pub alpha: [f64; 3],
    #[serde(rename = "L", default = "six")]
    pub band: usize,
    #[serde(rename = "T")]
    pub clip_bound: f64,
    #[serde(default = "one")]
    pub b: f64,
    /// Omit wall-clock timings so repeated runs are byte-identical.
    #[serde(default = "yes")]
    pub deterministic: bool,
    pub target: TargetConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub denominator: DenominatorConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub particles: ParticleConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetConfig {
    /// Angles in radians.
    Cone {
        theta_lo: f64,
        theta_hi: f64,
        /// `[re, im]`.
        #[serde(default = "unit_amplitude")]
        amplitude: [f64; 2],
    },
    /// Coefficient JSON as written by `design`; relative paths resolve
    /// against the config file's directory.
    Coefficients { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `[n_r, n_theta, n_phi]`.
    pub ball: [usize; 3],
    /// `[n_theta, n_phi]`; defaults to `[2L + 2, 4L + 4]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<[usize; 2]>,
    /// Number of polar angles in the exported pattern cross-section.
    pub section: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            ball: [24, 24, 48],
            sphere: None,
            section: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenominatorConfig {
    pub floor: f64,
}

impl Default for DenominatorConfig {
    fn default() -> Self {
        Self { floor: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Budget `δ` relative to `‖h‖_{L²(D)}`.
    pub delta: f64,
    pub seed: u64,
    pub budget: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        let p = PerturbationParams::default();
        Self {
            delta: p.relative_delta,
            seed: p.seed,
            budget: p.budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    /// Capacitance of one particle, or `"sphere"` for `4π a`.
    pub c0: Capacitance,
    pub a: f64,
    /// Boundary impedance `[re, im]`; absent means acoustically soft.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<[f64; 2]>,
    /// Particle surface area; defaults to `4π a²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_area: Option<f64>,
    /// Constant background refraction coefficient.
    pub n0: f64,
    pub k0a_threshold: f64,
    pub a_over_d_threshold: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        let t = ValidityThresholds::default();
        Self {
            c0: Capacitance::Value(0.01),
            a: 0.01,
            zeta: None,
            surface_area: None,
            n0: 1.0,
            k0a_threshold: t.k0a,
            a_over_d_threshold: t.a_over_d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Capacitance {
    Value(f64),
    Named(SphereCapacitance),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereCapacitance {
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            restart: o.restart,
            max_iter: o.max_iter,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn six() -> usize {
    6
}

fn yes() -> bool {
    true
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl DesignConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let TargetConfig::Coefficients { file } = &mut cfg.target {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("k must be positive");
        }
        let n = self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !((n - 1.0).abs() <= 1e-12) {
            return bad("alpha must be a unit vector to 1e-12");
        }
        if !(self.clip_bound > 0.0) {
            return bad("T must be positive");
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return bad("b must be positive");
        }
        if let TargetConfig::Cone {
            theta_lo,
            theta_hi,
            amplitude,
        } = &self.target
        {
            let pi = std::f64::consts::PI;
            if !(0.0 <= *theta_lo && theta_lo < theta_hi && *theta_hi <= pi) {
                return bad("cone needs 0 <= theta_lo < theta_hi <= pi");
            }
            if !amplitude.iter().all(|a| a.is_finite()) {
                return bad("cone amplitude must be finite");
            }
        }
        if self.grid.section < 2 {
            return bad("grid.section must be at least 2");
        }
        if let Some(z) = self.particles.zeta {
            if z == [0.0, 0.0] {
                return bad("particles.zeta must be nonzero");
            }
        }
        if let Capacitance::Value(c0) = self.particles.c0 {
            if !(c0 > 0.0) {
                return bad("particles.c0 must be positive");
            }
        }
        if !(self.particles.a > 0.0) {
            return bad("particles.a must be positive");
        }
        // everything else is checked by the core against the assembled params
        self.params()?.validate()?;
        Ok(())
    }

    /// The sphere grid used for misfit and focusing metrics.
    pub fn sphere_dims(&self) -> (usize, usize) {
        match self.grid.sphere {
            Some([t, p]) => (t, p),
            None => (2 * self.band + 2, 4 * self.band + 4),
        }
    }

    pub fn params(&self) -> CliResult<DesignParams> {
        let mut p = DesignParams::new(self.band, Some(self.clip_bound));
        p.k = self.k;
        p.alpha = self.alpha;
        p.support_radius = self.b;
        p.ball_dims = (self.grid.ball[0], self.grid.ball[1], self.grid.ball[2]);
        p.sphere_dims = self.sphere_dims();
        p.denominator_floor = self.denominator.floor;
        p.perturbation = PerturbationParams {
            relative_delta: self.perturbation.delta,
            seed: self.perturbation.seed,
            budget: self.perturbation.budget,
        };
        let pc = &self.particles;
        let mut model = match pc.c0 {
            Capacitance::Value(c0) => CapacitanceModel::soft(c0, pc.a)?,
            Capacitance::Named(SphereCapacitance::Sphere) => CapacitanceModel::soft_sphere(pc.a)?,
        };
        if let Some(z) = pc.zeta {
            let area = pc.surface_area.unwrap_or(model.surface_area);
            model = model.with_impedance(Complex64::new(z[0], z[1]), area);
        } else if let Some(area) = pc.surface_area {
            model.surface_area = area;
        }
        p.capacitance = model;
        p.n0 = pc.n0;
        p.thresholds = ValidityThresholds {
            k0a: pc.k0a_threshold,
            a_over_d: pc.a_over_d_threshold,
        };
        p.solver = SolverOptions {
            tol: self.solver.tol,
            restart: self.solver.restart,
            max_iter: self.solver.max_iter,
        };
        Ok(p)
    }

    pub fn target(&self) -> CliResult<Target> {
        Ok(match &self.target {
            TargetConfig::Cone {
                theta_lo,
                theta_hi,
                amplitude,
            } => Target::Cone {
                theta_lo: *theta_lo,
                theta_hi: *theta_hi,
                amplitude: Complex64::new(amplitude[0], amplitude[1]),
            },
            TargetConfig::Coefficients { file } => {
                let c: ShCoefficients = read_coefficients(file)?.coefficients;
                Target::Coefficients(c)
            }
        })
    }

    /// Cone edges, when the target is a cone.
    pub fn cone(&self) -> Option<(f64, f64)> {
        match self.target {
            TargetConfig::Cone { theta_lo, theta_hi, .. } => Some((theta_lo, theta_hi)),
            TargetConfig::Coefficients { .. } => None,
        }
    }

    /// Same run with another clipping bound.
    pub fn with_clip_bound(&self, t: f64) -> Self {
        let mut c = self.clone();
        c.clip_bound = t;
        c
    }
}
