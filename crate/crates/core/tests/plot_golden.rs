//! The SVG renderer against a checked-in reference.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test --test plot_golden`.

use std::path::Path;

use fedopt::harness::{render_svg, Series};
use fedopt::RoundMetrics;

fn series(name: &str, f: impl Fn(usize) -> (f64, f64)) -> Series {
    let rows = (0..=10)
        .map(|round| {
            let (sub, err) = f(round);
            RoundMetrics {
                algorithm: name.into(),
                round,
                objective: 0.5 + sub,
                suboptimality: sub,
                test_error: err,
                wall_ms: 0,
                diverged: false,
            }
        })
        .collect();
    Series {
        algorithm: name.into(),
        rows,
    }
}

fn fixture() -> Vec<Series> {
    let mut opt = series("opt", |_| (0.0, 0.21));
    opt.rows.truncate(1);
    vec![
        opt,
        series("svrgfo", |r| (0.2 * 0.3f64.powi(r as i32), 0.21 + 0.2 / (1.0 + r as f64))),
        series("gd", |r| (0.2 * 0.8f64.powi(r as i32), 0.24 + 0.2 / (1.0 + r as f64))),
        series("cocoa", |r| (0.2 / (1.0 + r as f64), 0.3 - 0.005 * r as f64)),
    ]
}

#[test]
fn svg_matches_golden_file() {
    let svg = render_svg(&fixture()).unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/convergence.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; run with UPDATE_GOLDEN=1 to create");
    assert_eq!(svg, want);
}

#[test]
fn svg_structure() {
    let svg = render_svg(&fixture()).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<g class=\"panel\"").count(), 2);
    // three iterative curves in each panel, opt drawn as a reference line
    assert_eq!(svg.matches("<polyline class=\"series\"").count(), 6);
    assert!(svg.contains("class=\"reference\""));
    for label in ["Rounds of communication", "Suboptimality f(w) - f* (log scale)", "Test error"] {
        assert!(svg.contains(label), "missing {label}");
    }
    for name in ["svrgfo", "gd", "cocoa"] {
        assert!(svg.contains(&format!("data-algorithm=\"{name}\"")));
    }
}
