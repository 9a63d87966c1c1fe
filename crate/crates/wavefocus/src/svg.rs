//! Minimal SVG renderer for the two figure kinds: a polar pattern plot and a
//! shaded cross-section of `|q|` with marching-squares isolines.
//!
//! Both live in the plane through the incident direction: the polar angle is
//! measured from `+z` (up), positive towards `φ = 0`, negative towards `φ = π`.

use std::fmt::Write;

const SIZE: f64 = 520.0;
const MARGIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
}

impl Stroke {
    fn dash(self) -> &'static str {
        match self {
            Stroke::Solid => "",
            Stroke::Dashed => " stroke-dasharray=\"8 4\"",
            Stroke::Dotted => " stroke-dasharray=\"2 3\"",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    /// `(signed polar angle, value ≥ 0)`, sorted by angle.
    pub points: Vec<(f64, f64)>,
    pub stroke: Stroke,
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{h}\" viewBox=\"0 0 {SIZE} {h}\">",
        h = SIZE + 40.0
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{x}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        escape(title),
        x = SIZE / 2.0
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plane coordinates `(x, z)` to SVG pixels; `scale` maps one unit to pixels.
fn to_px(x: f64, z: f64, scale: f64) -> (f64, f64) {
    let c = SIZE / 2.0;
    (c + scale * x, c + 20.0 - scale * z)
}

/// Polar plot of `|A|`-like curves; radius is the value.
pub fn polar_plot(title: &str, curves: &[Curve]) -> String {
    let vmax = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1))
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let vmax = if vmax > 0.0 { vmax } else { 1.0 };
    let scale = (SIZE / 2.0 - MARGIN) / vmax;
    let mut out = String::new();
    header(&mut out, title);
    let (cx, cy) = to_px(0.0, 0.0, scale);
    for i in 1..=4 {
        let r = vmax * i as f64 / 4.0;
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#bbb\" stroke-width=\"0.7\"/>",
            r * scale
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#777\">{}</text>",
            cx + 3.0,
            cy - r * scale - 2.0,
            fmt_tick(r)
        );
    }
    for deg in (0..360).step_by(30) {
        let a = (deg as f64).to_radians();
        let (x, y) = to_px(vmax * a.sin(), vmax * a.cos(), scale);
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.2}\" y1=\"{cy:.2}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\" stroke-width=\"0.7\"/>"
        );
    }
    let colors = ["#000000", "#1f5fa8", "#b8432f"];
    for (i, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(a, v)| {
                let (x, y) = to_px(v * a.sin(), v * a.cos(), scale);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = colors[i % colors.len()];
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{}/>",
            pts.join(" "),
            c.stroke.dash()
        );
        let ly = SIZE + 10.0;
        let lx = 20.0 + 170.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.6\"{}/>",
            lx + 30.0,
            c.stroke.dash()
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 36.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Samples of a field on the half-plane section, structured in
/// `(radius, signed angle)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSection {
    pub radii: Vec<f64>,
    /// Ascending signed polar angles.
    pub angles: Vec<f64>,
    /// `values[ir][ia]`.
    pub values: Vec<Vec<f64>>,
}

impl PolarSection {
    fn point(&self, ir: f64, ia: f64) -> (f64, f64) {
        let r = lerp_index(&self.radii, ir);
        let a = lerp_index(&self.angles, ia);
        (r * a.sin(), r * a.cos())
    }

    /// Repeat the first column one turn later when the angles cover both half-planes.
    fn closed(&self) -> PolarSection {
        let mut s = self.clone();
        if let (Some(&a0), Some(&a1)) = (self.angles.first(), self.angles.last()) {
            if a0 < 0.0 && a1 > 0.0 && a1 - a0 > core::f64::consts::PI {
                s.angles.push(a0 + core::f64::consts::TAU);
                for row in &mut s.values {
                    let v = row[0];
                    row.push(v);
                }
            }
        }
        s
    }
}

fn lerp_index(v: &[f64], t: f64) -> f64 {
    let i = (t.floor() as usize).min(v.len().saturating_sub(2));
    let f = t - i as f64;
    if v.len() < 2 {
        return v[0];
    }
    v[i] * (1.0 - f) + v[i + 1] * f
}

/// Shaded section (darker is larger) with `levels` isolines.
pub fn contour_plot(title: &str, section: &PolarSection, levels: usize) -> String {
    let section = &section.closed();
    let vmax = section
        .values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let rmax = section.radii.iter().copied().fold(0.0f64, f64::max);
    let scale = (SIZE / 2.0 - MARGIN) / if rmax > 0.0 { rmax } else { 1.0 };
    let mut out = String::new();
    header(&mut out, title);
    let (nr, na) = (section.radii.len(), section.angles.len());
    for ir in 0..nr.saturating_sub(1) {
        for ia in 0..na.saturating_sub(1) {
            let v = [
                section.values[ir][ia],
                section.values[ir + 1][ia],
                section.values[ir + 1][ia + 1],
                section.values[ir][ia + 1],
            ];
            let mean = v.iter().sum::<f64>() / 4.0;
            let shade = if vmax > 0.0 && mean.is_finite() {
                (255.0 * (1.0 - (mean / vmax).clamp(0.0, 1.0))).round() as u8
            } else {
                255
            };
            let corners = [
                section.point(ir as f64, ia as f64),
                section.point((ir + 1) as f64, ia as f64),
                section.point((ir + 1) as f64, (ia + 1) as f64),
                section.point(ir as f64, (ia + 1) as f64),
            ];
            let pts: Vec<String> = corners
                .iter()
                .map(|&(x, z)| {
                    let (px, py) = to_px(x, z, scale);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                "<polygon points=\"{}\" fill=\"rgb({shade},{shade},{shade})\" stroke=\"rgb({shade},{shade},{shade})\" stroke-width=\"0.3\"/>",
                pts.join(" ")
            );
        }
    }
    if vmax > 0.0 {
        for k in 1..=levels {
            let level = vmax * k as f64 / (levels + 1) as f64;
            for ((a, b), (c, d)) in marching_squares(&section.values, level) {
                let (x1, y1) = to_px_pair(section.point(a, b), scale);
                let (x2, y2) = to_px_pair(section.point(c, d), scale);
                let _ = writeln!(
                    out,
                    "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#c03020\" stroke-width=\"0.8\"/>"
                );
            }
        }
    }
    let (cx, cy) = to_px(0.0, 0.0, scale);
    let _ = writeln!(
        out,
        "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>",
        rmax * scale
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">max {} ; isolines at multiples of max/{}</text>",
        SIZE + 14.0,
        fmt_tick(vmax),
        levels + 1
    );
    out.push_str("</svg>\n");
    out
}

fn to_px_pair(p: (f64, f64), scale: f64) -> (f64, f64) {
    to_px(p.0, p.1, scale)
}

type Segment = ((f64, f64), (f64, f64));

/// Isoline segments of `values[i][j]` at `level`, in fractional index space.
pub fn marching_squares(values: &[Vec<f64>], level: f64) -> Vec<Segment> {
    let mut segs = Vec::new();
    let ni = values.len();
    if ni < 2 {
        return segs;
    }
    let nj = values[0].len();
    for i in 0..ni - 1 {
        for j in 0..nj.saturating_sub(1) {
            // corners counter-clockwise from (i, j)
            let c = [
                (i as f64, j as f64, values[i][j]),
                (i as f64 + 1.0, j as f64, values[i + 1][j]),
                (i as f64 + 1.0, j as f64 + 1.0, values[i + 1][j + 1]),
                (i as f64, j as f64 + 1.0, values[i][j + 1]),
            ];
            if c.iter().any(|p| !p.2.is_finite()) {
                continue;
            }
            let case = c
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, p)| acc | (((p.2 >= level) as usize) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let edge = |e: usize| {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                let t = (level - a.2) / (b.2 - a.2);
                (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
            };
            // edges crossed, as pairs; saddles resolved by the centre mean
            let centre_high = c.iter().map(|p| p.2).sum::<f64>() / 4.0 >= level;
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 => {
                    if centre_high {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre_high {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(0, 1), (2, 3)]
                    }
                }
                _ => &[],
            };
            for &(a, b) in pairs {
                segs.push((edge(a), edge(b)));
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marching_squares_circle_has_closed_crossings() {
        let n = 21;
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (x, y) = (i as f64 - 10.0, j as f64 - 10.0);
                        (x * x + y * y).sqrt()
                    })
                    .collect()
            })
            .collect();
        let segs = marching_squares(&values, 5.0);
        assert!(!segs.is_empty());
        for ((a, b), (c, d)) in segs {
            for (x, y) in [(a, b), (c, d)] {
                let r = ((x - 10.0).powi(2) + (y - 10.0).powi(2)).sqrt();
                assert!((r - 5.0).abs() < 0.3, "{r}");
            }
        }
    }

    #[test]
    fn flat_field_has_no_isolines() {
        let values = vec![vec![1.0; 5]; 5];
        assert!(marching_squares(&values, 0.5).is_empty());
    }

    #[test]
    fn plots_are_well_formed_and_deterministic() {
        let curve = Curve {
            label: "|A|".into(),
            points: (0..=36)
                .map(|i| (-3.0 + i as f64 / 6.0, 1.0 + (i as f64 * 0.3).sin().abs()))
                .collect(),
            stroke: Stroke::Solid,
        };
        let a = polar_plot("pattern", core::slice::from_ref(&curve));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a, polar_plot("pattern", &[curve]));
        let sec = PolarSection {
            radii: vec![0.1, 0.5, 1.0],
            angles: vec![-1.0, 0.0, 1.0],
            values: vec![vec![0.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 0.0]],
        };
        let c = contour_plot("|q| & more", &sec, 3);
        assert!(c.contains("&amp;"));
        assert!(c.contains("<polygon"));
    }
}
