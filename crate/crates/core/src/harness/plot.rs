//! Two-panel SVG of convergence curves: suboptimality on a log scale (left)
//! and test error (right) against communication rounds.
//!
//! A series whose algorithm is `opt` is drawn as a dashed horizontal
//! reference line in both panels instead of a curve.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{parse_csv, RoundMetrics};

/// Suboptimality values below this (including negative ones) are drawn here.
pub const LOG_FLOOR: f64 = 1e-16;
pub const REFERENCE_ID: &str = "opt";

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 300.0;
const TOP: f64 = 40.0;
const LEFT: [f64; 2] = [80.0, 560.0];
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub algorithm: String,
    pub rows: Vec<RoundMetrics>,
}

/// Groups rows by algorithm, keeping first-appearance order.
pub fn group_rows(rows: Vec<RoundMetrics>) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|s| s.algorithm == r.algorithm) {
            Some(s) => s.rows.push(r),
            None => out.push(Series {
                algorithm: r.algorithm.clone(),
                rows: vec![r],
            }),
        }
    }
    out
}

pub fn load_series<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Series>> {
    let mut rows = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        rows.extend(parse_csv(&text)?);
    }
    Ok(group_rows(rows))
}

/// Reads metrics CSVs and writes the SVG to `out`.
pub fn emit_plot<P: AsRef<Path>>(metrics_files: &[P], out: impl AsRef<Path>) -> Result<()> {
    let series = load_series(metrics_files)?;
    let svg = render_svg(&series)?;
    let out = out.as_ref();
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Axis { lo, hi }
        } else {
            Axis { lo: lo - 0.5, hi: lo + 0.5 }
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn log_value(s: f64) -> f64 {
    s.max(LOG_FLOOR).log10()
}

fn points(rows: &[RoundMetrics], value: impl Fn(&RoundMetrics) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|r| value(r).filter(|v| v.is_finite()).map(|v| (r.round as f64, v)))
        .collect()
}

pub fn render_svg(series: &[Series]) -> Result<String> {
    let (refs, curves): (Vec<&Series>, Vec<&Series>) = series
        .iter()
        .filter(|s| !s.rows.is_empty())
        .partition(|s| s.algorithm == REFERENCE_ID);
    if curves.is_empty() && refs.is_empty() {
        return Err(Error::EmptyMetrics);
    }

    let sub: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|s| points(&s.rows, |r| (!r.diverged).then(|| log_value(r.suboptimality))))
        .collect();
    let err: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|s| points(&s.rows, |r| (!r.diverged).then_some(r.test_error)))
        .collect();
    let ref_err: Vec<f64> = refs
        .iter()
        .filter_map(|s| s.rows[0].test_error.is_finite().then_some(s.rows[0].test_error))
        .collect();

    let max_round = curves
        .iter()
        .flat_map(|s| s.rows.iter().map(|r| r.round))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x = Axis::new(0.0, max_round);

    let sub_vals = sub.iter().flatten().map(|p| p.1);
    let (lo, hi) = sub_vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    // the optimum sits at the bottom of the log panel
    let y_sub = if lo.is_finite() {
        Axis::new(lo.floor(), hi.ceil().max(lo.floor() + 1.0))
    } else {
        Axis::new(LOG_FLOOR.log10(), 0.0)
    };

    let err_vals = err.iter().flatten().map(|p| p.1).chain(ref_err.iter().copied());
    let (lo, hi) = err_vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let y_err = if lo.is_finite() {
        let pad = ((hi - lo) * 0.05).max(0.005);
        Axis::new(((lo - pad) * 100.0).floor() / 100.0, ((hi + pad) * 100.0).ceil() / 100.0)
    } else {
        Axis::new(0.0, 1.0)
    };

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, "<title>Convergence per communication round</title>");
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let panels = [
        ("suboptimality", "Suboptimality f(w) - f* (log scale)", &y_sub, &sub, true),
        ("test_error", "Test error", &y_err, &err, false),
    ];
    for (p, (id, ylabel, y, data, log)) in panels.into_iter().enumerate() {
        let left = LEFT[p];
        let px = |v: f64| left + x.frac(v) * PANEL_W;
        let py = |v: f64| TOP + (1.0 - y.frac(v)) * PANEL_H;
        let _ = writeln!(w, r#"<g class="panel" id="{id}">"#);
        let _ = writeln!(
            w,
            r#"<rect x="{left}" y="{TOP}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let v = x.lo + (x.hi - x.lo) * i as f64 / 5.0;
            let _ = writeln!(
                w,
                r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                px(v),
                TOP + PANEL_H + 16.0,
                v.round()
            );
        }
        let y_ticks: Vec<f64> = if log {
            let step = ((y.hi - y.lo) / 8.0).ceil().max(1.0);
            let mut t = Vec::new();
            let mut v = y.lo;
            while v <= y.hi + 1e-9 {
                t.push(v);
                v += step;
            }
            t
        } else {
            (0..=5).map(|i| y.lo + (y.hi - y.lo) * i as f64 / 5.0).collect()
        };
        for v in y_ticks {
            let label = if log { format!("1e{}", v.round()) } else { format!("{v:.3}") };
            let _ = writeln!(
                w,
                r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                left - 6.0,
                py(v) + 4.0
            );
        }
        let _ = writeln!(
            w,
            r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">Rounds of communication</text>"#,
            left + PANEL_W / 2.0,
            TOP + PANEL_H + 36.0
        );
        let (lx, ly) = (left - 58.0, TOP + PANEL_H / 2.0);
        let _ = writeln!(
            w,
            r#"<text class="axis-label" x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{ylabel}</text>"#
        );

        for (k, pts) in data.iter().enumerate() {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(r, v)| format!("{:.2},{:.2}", px(r), py(v)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline class="series" data-algorithm="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                curves[k].algorithm,
                PALETTE[k % PALETTE.len()],
                coords.join(" ")
            );
        }
        for s in &refs {
            let level = if log { Some(y.lo) } else { Some(s.rows[0].test_error).filter(|v| v.is_finite()) };
            if let Some(level) = level {
                let _ = writeln!(
                    w,
                    r#"<line class="reference" data-algorithm="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
                    s.algorithm,
                    px(x.lo),
                    py(level),
                    px(x.hi),
                    py(level)
                );
            }
        }
        let _ = writeln!(w, "</g>");
    }

    let _ = writeln!(w, r#"<g class="legend">"#);
    let entries = curves
        .iter()
        .enumerate()
        .map(|(k, s)| (s.algorithm.as_str(), PALETTE[k % PALETTE.len()], ""))
        .chain(refs.iter().map(|s| (s.algorithm.as_str(), "black", r#" stroke-dasharray="6 4""#)));
    for (i, (name, color, dash)) in entries.enumerate() {
        let lx = LEFT[0] + 120.0 * i as f64;
        let ly = 20.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 20.0
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, lx + 25.0, ly + 4.0);
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, round: usize, sub: f64, err: f64) -> RoundMetrics {
        RoundMetrics {
            algorithm: alg.into(),
            round,
            objective: 0.5 + sub,
            suboptimality: sub,
            test_error: err,
            wall_ms: 0,
            diverged: false,
        }
    }

    #[test]
    fn single_series_gives_one_polyline_per_panel() {
        let s = group_rows((0..5).map(|r| row("gd", r, 10f64.powi(-(r as i32)), 0.3)).collect());
        let svg = render_svg(&s).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches(r#"data-algorithm="gd""#).count(), 2);
        assert!(!svg.contains("class=\"reference\""));
    }

    #[test]
    fn negative_suboptimality_is_clamped() {
        let s = group_rows(vec![row("a", 0, 1.0, 0.2), row("a", 1, -1e-12, 0.1)]);
        let svg = render_svg(&s).unwrap();
        // the axis reaches down to the floor decade
        assert!(svg.contains(">1e-16</text>"), "{svg}");
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn reference_and_divergence() {
        let mut rows = vec![row("opt", 0, 0.0, 0.25), row("x", 0, 1.0, 0.5), row("x", 1, 0.1, 0.4)];
        rows.push(RoundMetrics {
            diverged: true,
            suboptimality: f64::INFINITY,
            ..row("x", 2, 0.0, 0.4)
        });
        let svg = render_svg(&group_rows(rows)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches(r#"class="reference""#).count(), 2);
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(render_svg(&[]), Err(Error::EmptyMetrics)));
        let empty = Series {
            algorithm: "a".into(),
            rows: vec![],
        };
        assert!(matches!(render_svg(&[empty]), Err(Error::EmptyMetrics)));
    }
}
