//! The subcommands as library calls; `main` only parses arguments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use wavefocus_core::design::{
    design, isotropic_fraction, particle_stage, potential_stage, synthesis_stage, verify, Design, SynthesisStage,
    Target, Verification,
};
use wavefocus_core::forward::scattering_amplitude;
use wavefocus_core::potential::PotentialField;
use wavefocus_core::sphergrid::{analyze as sh_analyze, cone_target, synthesize};
use wavefocus_core::synthesis::{evaluate_on_grid, predicted_amplitude_with};
use wavefocus_core::{BallGrid, Complex64, HExpansion, ShCoefficients, SphereField, SphereGrid};

use crate::bundle::{
    coefficient_entries, read_coefficients, read_q_field, sha256_hex, CoefficientEntry, CsvColumns, DirLock,
    FileRecord, OutputDir, Table, Q_FIELD_HEADER,
};
use crate::config::DesignConfig;
use crate::error::{CliError, CliResult};
use crate::report::{DesignReport, ErrorJson, Manifest, ValidityJson, VerificationReport};
use crate::svg::{contour_plot, polar_plot, Curve, PolarSection, Stroke};

pub const CONFIG_FILE: &str = "config.toml";
pub const TARGET_FILE: &str = "target_coefficients.json";
pub const TARGET_SECTION_FILE: &str = "target_section.csv";
pub const H_FILE: &str = "h_coefficients.json";
pub const Q_FILE: &str = "q_field.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const VALIDITY_FILE: &str = "validity.json";
pub const DESIGN_REPORT_FILE: &str = "design_report.json";
pub const DESIGN_MANIFEST: &str = "manifest.json";
pub const AMPLITUDE_FILE: &str = "amplitude.csv";
pub const PATTERN_FILE: &str = "pattern_section.csv";
pub const Q_SECTION_FILE: &str = "q_section.csv";
pub const VERIFY_REPORT_FILE: &str = "verification_report.json";
pub const VERIFY_MANIFEST: &str = "verify_manifest.json";
pub const PATTERN_SVG: &str = "pattern.svg";
pub const CONTOUR_SVG: &str = "contour.svg";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_MANIFEST: &str = "sweep_manifest.json";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const ANALYSIS_MANIFEST: &str = "analysis_manifest.json";
pub const PLOT_MANIFEST: &str = "plot_manifest.json";

/// Stage timings, kept only outside deterministic mode.
struct Clock {
    enabled: bool,
    last: Instant,
    laps: BTreeMap<&'static str, f64>,
}

impl Clock {
    fn new(deterministic: bool) -> Self {
        Self {
            enabled: !deterministic,
            last: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        if self.enabled {
            self.laps.insert(name, (now - self.last).as_secs_f64());
        }
        self.last = now;
    }

    fn timings(&self) -> Option<BTreeMap<&'static str, f64>> {
        self.enabled.then(|| self.laps.clone())
    }
}

fn manifest(
    command: &'static str,
    cfg: Option<&DesignConfig>,
    clock: &Clock,
    dir: &OutputDir,
    inputs: Vec<FileRecord>,
    error: Option<&CliError>,
) -> Manifest {
    let mut seeds = BTreeMap::new();
    if let Some(c) = cfg {
        seeds.insert("perturbation", c.perturbation.seed);
    }
    Manifest {
        tool: "wavefocus",
        version: env!("CARGO_PKG_VERSION"),
        core_version: wavefocus_core::VERSION,
        command,
        status: if error.is_some() { "FAILED" } else { "OK" },
        error: error.map(ErrorJson::from),
        deterministic: cfg.is_none_or(|c| c.deterministic),
        config: cfg.map(|c| serde_json::to_value(c).expect("config serializes")),
        seeds,
        timings_s: clock.timings(),
        inputs,
        files: dir.files().to_vec(),
    }
}

/// Write the manifest last, whatever happened, then hand back the result.
fn finish<T>(
    command: &'static str,
    name: &str,
    cfg: Option<&DesignConfig>,
    clock: &Clock,
    dir: &mut OutputDir,
    inputs: Vec<FileRecord>,
    result: CliResult<T>,
) -> CliResult<T> {
    let m = manifest(command, cfg, clock, dir, inputs, result.as_ref().err());
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    let path = dir.path(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    result
}

fn hash_input(path: &Path) -> CliResult<FileRecord> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileRecord {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[derive(Serialize)]
struct TargetJson {
    band: usize,
    tail_band: usize,
    truncation_floor: f64,
    coefficients: Vec<CoefficientEntry>,
}

#[derive(Serialize)]
struct HJson {
    band: usize,
    support_radius: f64,
    clip_bound: Option<f64>,
    clipped_count: usize,
    /// Whether `coefficients` came out of the denominator perturbation.
    perturbed: bool,
    /// Coefficients the potential was built from.
    coefficients: Vec<CoefficientEntry>,
    /// Solution of the moment relation before clipping.
    unclipped: Vec<CoefficientEntry>,
    clipped_mask: Vec<bool>,
}

fn h_json(synth: &SynthesisStage, final_h: Option<&HExpansion>) -> HJson {
    let h = final_h.unwrap_or(&synth.h);
    HJson {
        band: h.band(),
        support_radius: h.support_radius,
        clip_bound: synth.h.clip_bound,
        clipped_count: synth.h.clipped_count(),
        perturbed: final_h.is_some_and(|f| f.coeffs != synth.h.coeffs),
        coefficients: coefficient_entries(&h.coeffs),
        unclipped: coefficient_entries(&synth.h_raw.coeffs),
        clipped_mask: synth.h.clipped_mask.clone(),
    }
}

/// Pattern cross-section through the incident plane: `(node, signed angle)`
/// of a two-meridian sphere grid, ascending in angle.
fn section_nodes(grid: &SphereGrid) -> Vec<(usize, f64)> {
    let n_phi = grid.n_phi();
    let mut out: Vec<(usize, f64)> = (0..grid.len())
        .map(|i| {
            let t = grid.theta()[i / n_phi];
            (i, if i % n_phi == 0 { t } else { -t })
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

fn section_grid(cfg: &DesignConfig) -> CliResult<SphereGrid> {
    Ok(SphereGrid::new(cfg.grid.section, 2)?)
}

fn target_section(cfg: &DesignConfig, target: &Target, f_l: &ShCoefficients) -> CliResult<Table> {
    let grid = section_grid(cfg)?;
    let truncated = synthesize(f_l, &grid);
    let raw: SphereField = match target {
        Target::Cone {
            theta_lo,
            theta_hi,
            amplitude,
        } => cone_target(*theta_lo, *theta_hi, *amplitude, &grid)?,
        Target::Coefficients(c) => synthesize(c, &grid),
    };
    let mut t = Table::new(&["angle", "abs_raw", "abs_target", "re_target", "im_target"]);
    for (i, a) in section_nodes(&grid) {
        let f = truncated.values[i];
        t.push_f64(&[a, raw.values[i].norm(), f.norm(), f.re, f.im]);
    }
    Ok(t)
}

fn q_field_table(p: &PotentialField) -> Table {
    let mut t = Table::new(&Q_FIELD_HEADER);
    for (i, (q, d)) in p.q_values.iter().zip(&p.denom_values).enumerate() {
        let (r, th, ph) = p.grid.spherical(i);
        t.push_f64(&[r, th, ph, q.re, q.im, q.norm(), d.re, d.im]);
    }
    t
}

/// Outcome of `design`.
#[derive(Debug, Clone)]
pub struct DesignRun {
    pub design: Design,
    pub report: DesignReport,
}

/// Run the design pipeline and export the bundle into `out`.
///
/// On a failure whatever finished is kept and the manifest says `FAILED`.
pub fn run_design(cfg: &DesignConfig, out: &Path) -> CliResult<DesignRun> {
    let _lock = DirLock::acquire(out)?;
    let mut dir = OutputDir::create(out)?;
    let mut clock = Clock::new(cfg.deterministic);
    let result = design_into(cfg, &mut dir, &mut clock);
    finish(
        "design",
        DESIGN_MANIFEST,
        Some(cfg),
        &clock,
        &mut dir,
        Vec::new(),
        result,
    )
}

fn design_into(cfg: &DesignConfig, dir: &mut OutputDir, clock: &mut Clock) -> CliResult<DesignRun> {
    dir.write(CONFIG_FILE, cfg.to_toml().as_bytes())?;
    let params = cfg.params()?;
    let target = cfg.target()?;

    let synth = synthesis_stage(&params, &target)?;
    clock.lap("synthesis");
    dir.write_json(
        TARGET_FILE,
        &TargetJson {
            band: synth.target.band(),
            tail_band: wavefocus_core::design::TAIL_BAND,
            truncation_floor: synth.truncation_floor,
            coefficients: coefficient_entries(&synth.target),
        },
    )?;
    dir.write_csv(TARGET_SECTION_FILE, &target_section(cfg, &target, &synth.target)?)?;
    dir.write_json(H_FILE, &h_json(&synth, None))?;

    let pot = potential_stage(&params, &synth)?;
    clock.lap("potential");
    dir.write_json(H_FILE, &h_json(&synth, Some(&pot.h)))?;
    dir.write_csv(Q_FILE, &q_field_table(&pot.potential))?;

    let parts = particle_stage(&params, &pot)?;
    clock.lap("particles");
    let mut t = Table::new(&["r", "theta", "phi", "n", "negative_flag"]);
    for (i, (n, neg)) in parts
        .density
        .n_values
        .iter()
        .zip(&parts.density.negative_mask)
        .enumerate()
    {
        let (r, th, ph) = pot.potential.grid.spherical(i);
        t.push(vec![
            r.to_string(),
            th.to_string(),
            ph.to_string(),
            n.to_string(),
            (*neg as u8).to_string(),
        ]);
    }
    dir.write_csv(DENSITY_FILE, &t)?;
    dir.write_json(VALIDITY_FILE, &ValidityJson::from(&parts.validity))?;

    let predicted = predicted_amplitude_with(&pot.h, &synth.moments);
    let predicted_misfit = coefficient_distance(&predicted, &synth.target);
    let design = Design {
        synthesis: synth,
        potential: pot,
        particles: parts,
    };
    let report = DesignReport::new(&design, predicted_misfit, cfg.clip_bound);
    dir.write_json(DESIGN_REPORT_FILE, &report)?;
    Ok(DesignRun { design, report })
}

fn coefficient_distance(a: &ShCoefficients, b: &ShCoefficients) -> f64 {
    let band = a.band().max(b.band());
    let (a, b) = (a.truncated(band), b.truncated(band));
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// A design bundle read back from disk.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub config: DesignConfig,
    pub potential: PotentialField,
    pub h: HExpansion,
    pub target: ShCoefficients,
    pub inputs: Vec<FileRecord>,
}

impl Bundle {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let cfg_path = dir.join(CONFIG_FILE);
        let config = DesignConfig::load(&cfg_path)?;
        let params = config.params()?;
        let grid: BallGrid = params.ball_grid()?;
        let q_path = dir.join(Q_FILE);
        let (q, denom) = read_q_field(&q_path, &grid)?;
        let h_path = dir.join(H_FILE);
        let hc = read_coefficients(&h_path)?;
        let h = HExpansion::new(hc.coefficients, config.b);
        let t_path = dir.join(TARGET_FILE);
        let target = read_coefficients(&t_path)?.coefficients;
        let h_values = evaluate_on_grid(&h, &grid);
        let inputs = [&cfg_path, &q_path, &h_path, &t_path]
            .into_iter()
            .map(|p| hash_input(p))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            potential: PotentialField {
                grid,
                q_values: q,
                denom_values: denom,
                h_values,
                source_h: h.clone(),
            },
            h,
            target,
            inputs,
        })
    }
}

/// Outcome of `verify`.
#[derive(Debug, Clone)]
pub struct VerifyRun {
    pub verification: Verification,
    pub report: VerificationReport,
}

/// Independent forward check of a bundle; writes into `out`.
pub fn run_verify(bundle_dir: &Path, out: &Path) -> CliResult<VerifyRun> {
    let bundle = Bundle::read(bundle_dir)?;
    let _lock = DirLock::acquire(out)?;
    let mut dir = OutputDir::create(out)?;
    let mut clock = Clock::new(bundle.config.deterministic);
    let result = verify_into(&bundle, &mut dir, &mut clock);
    if let Err(e) = &result {
        // keep the residual history of a failed solve next to the manifest
        let _ = dir.write_json(VERIFY_REPORT_FILE, &ErrorJson::from(e));
    }
    let cfg = bundle.config.clone();
    finish(
        "verify",
        VERIFY_MANIFEST,
        Some(&cfg),
        &clock,
        &mut dir,
        bundle.inputs.clone(),
        result,
    )
}

fn verify_into(b: &Bundle, dir: &mut OutputDir, clock: &mut Clock) -> CliResult<VerifyRun> {
    let cfg = &b.config;
    let params = cfg.params()?;
    let cone = cfg.cone();
    let v = verify(&params, &b.target, &b.h, &b.potential, cone)?;
    clock.lap("solve");

    let mut t = Table::new(&["theta", "phi", "re", "im", "abs", "target_re", "target_im"]);
    for (i, (a, f)) in v.amplitude.values.iter().zip(&v.target.values).enumerate() {
        let n = v.amplitude.grid.node(i);
        t.push_f64(&[n.theta, n.phi, a.re, a.im, a.norm(), f.re, f.im]);
    }
    dir.write_csv(AMPLITUDE_FILE, &t)?;

    // |A| along the section, by direct quadrature, against the design's target section
    let sec_grid = section_grid(cfg)?;
    let a_sec = scattering_amplitude(&b.potential, &v.field, params.k, &sec_grid);
    let target_sec = CsvColumns::read(&b.dir.join(TARGET_SECTION_FILE))?;
    let (c_angle, c_raw, c_abs) = (
        target_sec.column("angle")?,
        target_sec.column("abs_raw")?,
        target_sec.column("abs_target")?,
    );
    let nodes = section_nodes(&sec_grid);
    if target_sec.rows.len() != nodes.len() {
        return Err(CliError::format(
            b.dir.join(TARGET_SECTION_FILE),
            "section does not match the configured grid",
        ));
    }
    let mut t = Table::new(&["angle", "abs_attained", "abs_target", "abs_raw"]);
    for ((i, a), row) in nodes.iter().zip(&target_sec.rows) {
        if (row[c_angle] - a).abs() > 1e-12 {
            return Err(CliError::format(
                b.dir.join(TARGET_SECTION_FILE),
                "section angles do not match the configured grid",
            ));
        }
        t.push_f64(&[*a, a_sec.values[*i].norm(), row[c_abs], row[c_raw]]);
    }
    dir.write_csv(PATTERN_FILE, &t)?;
    dir.write(PATTERN_SVG, pattern_svg(&t).as_bytes())?;

    let (q_table, section) = q_section(&b.potential);
    dir.write_csv(Q_SECTION_FILE, &q_table)?;
    dir.write(
        CONTOUR_SVG,
        contour_plot("|q| on the xz cross-section", &section, 5).as_bytes(),
    )?;
    clock.lap("export");

    let iso = cone.map(|(lo, hi)| isotropic_fraction(lo, hi));
    let report = VerificationReport::new(&v, b.potential.max_abs_q(), iso);
    dir.write_json(VERIFY_REPORT_FILE, &report)?;
    Ok(VerifyRun {
        verification: v,
        report,
    })
}

fn pattern_svg(t: &Table) -> String {
    let col = |j: usize| -> Vec<(f64, f64)> {
        t.rows
            .iter()
            .map(|r| (r[0].parse().unwrap_or(f64::NAN), r[j].parse().unwrap_or(f64::NAN)))
            .collect()
    };
    polar_plot(
        "|A| in the incident plane",
        &[
            Curve {
                label: "attained |A|".into(),
                points: col(1),
                stroke: Stroke::Solid,
            },
            Curve {
                label: "target, band limited".into(),
                points: col(2),
                stroke: Stroke::Dotted,
            },
            Curve {
                label: "target indicator".into(),
                points: col(3),
                stroke: Stroke::Dashed,
            },
        ],
    )
}

/// Nodes on the `φ = 0` and `φ = π` meridians as a structured section.
fn q_section(p: &PotentialField) -> (Table, PolarSection) {
    let g = &p.grid;
    let (nr, nt, np) = g.dims();
    // `(theta index, azimuth index, signed angle)` ascending in angle
    let mut cols: Vec<(usize, usize, f64)> = Vec::new();
    if np % 2 == 0 {
        for it in (0..nt).rev() {
            cols.push((it, np / 2, -g.theta()[it]));
        }
    }
    for it in 0..nt {
        cols.push((it, 0, g.theta()[it]));
    }
    let mut t = Table::new(&["r", "angle", "x", "z", "re_q", "im_q", "abs_q"]);
    let mut values = Vec::with_capacity(nr);
    for ir in 0..nr {
        let r = g.radii()[ir];
        let mut row = Vec::with_capacity(cols.len());
        for &(it, ip, a) in &cols {
            let q = p.q_values[(ir * nt + it) * np + ip];
            t.push_f64(&[r, a, r * a.sin(), r * a.cos(), q.re, q.im, q.norm()]);
            row.push(q.norm());
        }
        values.push(row);
    }
    let section = PolarSection {
        radii: g.radii().to_vec(),
        angles: cols.iter().map(|c| c.2).collect(),
        values,
    };
    (t, section)
}

/// One row of a `sweep-t` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    /// `OK` or the error kind.
    pub status: String,
    pub max_abs_q: f64,
    pub l2_misfit: f64,
    pub relative_misfit: f64,
    pub in_cone_fraction: f64,
    pub clipped_count: usize,
    pub iterations: usize,
}

pub fn sweep_row(cfg: &DesignConfig, t: f64) -> SweepRow {
    let failed = |e: &CliError| SweepRow {
        t,
        status: e.kind().to_string(),
        max_abs_q: f64::NAN,
        l2_misfit: f64::NAN,
        relative_misfit: f64::NAN,
        in_cone_fraction: f64::NAN,
        clipped_count: 0,
        iterations: 0,
    };
    let run = || -> CliResult<SweepRow> {
        let c = cfg.with_clip_bound(t);
        c.validate()?;
        let params = c.params()?;
        let d = design(&params, &c.target()?)?;
        let v = verify(
            &params,
            &d.synthesis.target,
            &d.potential.h,
            &d.potential.potential,
            c.cone(),
        )?;
        Ok(SweepRow {
            t,
            status: "OK".into(),
            max_abs_q: d.max_abs_q(),
            l2_misfit: v.misfit.l2_misfit,
            relative_misfit: v.misfit.relative,
            in_cone_fraction: v.focusing.map_or(f64::NAN, |f| f.in_cone_fraction),
            clipped_count: d.synthesis.h.clipped_count(),
            iterations: v.field.iterations,
        })
    };
    run().unwrap_or_else(|e| failed(&e))
}

/// Design and verify once per clipping bound; failures become rows.
pub fn sweep_t(cfg: &DesignConfig, values: &[f64], out: &Path) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Config("sweep-t needs at least one T value".into()));
    }
    let _lock = DirLock::acquire(out)?;
    let mut dir = OutputDir::create(out)?;
    let mut clock = Clock::new(cfg.deterministic);
    let rows: Vec<SweepRow> = values.iter().map(|&t| sweep_row(cfg, t)).collect();
    clock.lap("sweep");
    let mut t = Table::new(&[
        "T",
        "status",
        "max_abs_q",
        "l2_misfit",
        "relative_misfit",
        "in_cone_fraction",
        "clipped_count",
        "iterations",
    ]);
    for r in &rows {
        t.push(vec![
            r.t.to_string(),
            r.status.clone(),
            r.max_abs_q.to_string(),
            r.l2_misfit.to_string(),
            r.relative_misfit.to_string(),
            r.in_cone_fraction.to_string(),
            r.clipped_count.to_string(),
            r.iterations.to_string(),
        ]);
    }
    let result = dir.write_csv(SWEEP_FILE, &t).map(|_| rows);
    finish(
        "sweep-t",
        SWEEP_MANIFEST,
        Some(cfg),
        &clock,
        &mut dir,
        Vec::new(),
        result,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub band: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub l2_norm: f64,
    /// `Σ_m |c_ℓm|²` per degree.
    pub degree_power: Vec<f64>,
    pub coefficients: Vec<CoefficientEntry>,
}

/// Spherical-harmonic analysis of samples on a Gauss–Legendre × uniform grid.
///
/// The CSV needs `theta`, `phi`, `re`, `im` columns in grid order
/// (`theta` slow, `phi` fast), as `amplitude.csv` has.
pub fn analyze_samples(samples: &Path, band: Option<usize>, out: &Path) -> CliResult<Analysis> {
    let table = CsvColumns::read(samples)?;
    let (ct, cp, cre, cim) = (
        table.column("theta")?,
        table.column("phi")?,
        table.column("re")?,
        table.column("im")?,
    );
    let theta0 = table.rows.first().map(|r| r[ct]);
    let n_phi = table.rows.iter().take_while(|r| Some(r[ct]) == theta0).count();
    if n_phi == 0 || table.rows.len() % n_phi != 0 {
        return Err(CliError::format(
            samples,
            "samples do not form a theta x phi product grid",
        ));
    }
    let n_theta = table.rows.len() / n_phi;
    let grid = SphereGrid::new(n_theta, n_phi)?;
    for (i, row) in table.rows.iter().enumerate() {
        let n = grid.node(i);
        if (row[ct] - n.theta).abs() > 1e-9 || (row[cp] - n.phi).abs() > 1e-9 {
            return Err(CliError::format(
                samples,
                format!("sample {i} is not on the {n_theta} x {n_phi} Gauss-Legendre grid"),
            ));
        }
    }
    let band = band.unwrap_or_else(|| grid.max_band());
    if band > grid.max_band() {
        return Err(CliError::Config(format!(
            "band {band} exceeds what a {n_theta} x {n_phi} grid resolves ({})",
            grid.max_band()
        )));
    }
    let values: Vec<Complex64> = table
        .values(cre)
        .zip(table.values(cim))
        .map(|(r, i)| Complex64::new(r, i))
        .collect();
    let field = SphereField { grid, values };
    let c = sh_analyze(&field, band)?;
    let degree_power = (0..=band)
        .map(|l| {
            c.iter()
                .filter(|(ll, _, _)| *ll == l)
                .map(|(_, _, v)| v.norm_sqr())
                .sum()
        })
        .collect();
    let result = Analysis {
        band,
        n_theta,
        n_phi,
        l2_norm: field.l2_norm(),
        degree_power,
        coefficients: coefficient_entries(&c),
    };
    let _lock = DirLock::acquire(out)?;
    let mut dir = OutputDir::create(out)?;
    let clock = Clock::new(true);
    let r = dir.write_json(ANALYSIS_FILE, &result).map(|_| result);
    let inputs = vec![hash_input(samples)?];
    finish("analyze", ANALYSIS_MANIFEST, None, &clock, &mut dir, inputs, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Pattern,
    Contour,
}

/// Re-render a figure from a verified bundle's CSV.
pub fn plot(bundle_dir: &Path, figure: Figure, out: &Path) -> CliResult<PathBuf> {
    let (input, name, svg) = match figure {
        Figure::Pattern => {
            let path = bundle_dir.join(PATTERN_FILE);
            let t = CsvColumns::read(&path)?;
            let cols = [
                t.column("angle")?,
                t.column("abs_attained")?,
                t.column("abs_target")?,
                t.column("abs_raw")?,
            ];
            let mut table = Table::new(&["angle", "abs_attained", "abs_target", "abs_raw"]);
            for r in &t.rows {
                table.push_f64(&cols.map(|c| r[c]));
            }
            (path, PATTERN_SVG, pattern_svg(&table))
        }
        Figure::Contour => {
            let path = bundle_dir.join(Q_SECTION_FILE);
            let t = CsvColumns::read(&path)?;
            let (cr, ca, cq) = (t.column("r")?, t.column("angle")?, t.column("abs_q")?);
            let first_r = t.rows.first().map(|r| r[cr]);
            let na = t.rows.iter().take_while(|r| Some(r[cr]) == first_r).count();
            if na == 0 || t.rows.len() % na != 0 {
                return Err(CliError::format(&path, "section is not a radius x angle table"));
            }
            let section = PolarSection {
                radii: t.rows.iter().step_by(na).map(|r| r[cr]).collect(),
                angles: t.rows[..na].iter().map(|r| r[ca]).collect(),
                values: t.rows.chunks(na).map(|c| c.iter().map(|r| r[cq]).collect()).collect(),
            };
            (
                path,
                CONTOUR_SVG,
                contour_plot("|q| on the xz cross-section", &section, 5),
            )
        }
    };
    let _lock = DirLock::acquire(out)?;
    let mut dir = OutputDir::create(out)?;
    let clock = Clock::new(true);
    let r = dir.write(name, svg.as_bytes()).map(|_| dir.path(name));
    let inputs = vec![hash_input(&input)?];
    finish("plot", PLOT_MANIFEST, None, &clock, &mut dir, inputs, r)
}
