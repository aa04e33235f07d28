//! Standalone SVG plots.

use std::f64::consts::PI;
use std::fmt::Write;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="10" y="20" font-family="sans-serif" font-size="14">{title}</text>"#);
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, closed: bool, dashed: bool) {
    let tag = if closed { "polygon" } else { "polyline" };
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
    let _ = writeln!(out, r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, coords.join(" "));
}

fn legend(out: &mut String, x: f64, y: f64, entries: &[(&str, &str)]) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let yy = y + 16.0 * k as f64;
        let _ = writeln!(out, r#"<line x1="{x}" y1="{yy}" x2="{}" y2="{yy}" stroke="{color}" stroke-width="2"/>"#, x + 20.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{label}</text>"#, x + 26.0, yy + 4.0);
    }
}

/// Polar plot of q_lower and q_upper against the normal angle, with the
/// rms mean as a dashed circle. Rows are (θ, q_lower, q_upper); NaN rows are skipped.
pub fn polar_interval_plot(rows: &[(f64, f64, f64)], rms: f64) -> String {
    let (w, h) = (520.0, 560.0);
    let (cx, cy, radius) = (260.0, 300.0, 220.0);
    let vmax = rows
        .iter()
        .flat_map(|r| [r.1, r.2])
        .filter(|v| v.is_finite())
        .fold(rms, f64::max)
        .max(1e-12);
    let to_xy = |theta: f64, v: f64| (cx + radius * v / vmax * theta.cos(), cy - radius * v / vmax * theta.sin());
    let mut out = String::new();
    header(&mut out, w, h, "pinning interval by normal direction");
    for k in 1..=4 {
        let r = radius * k as f64 / 4.0;
        let _ = writeln!(out, r##"<circle cx="{cx}" cy="{cy}" r="{r:.2}" fill="none" stroke="#dddddd"/>"##);
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="#888888">{:.3}</text>"##,
            cx + r + 2.0,
            cy - 2.0,
            vmax * k as f64 / 4.0
        );
    }
    let circle: Vec<(f64, f64)> = (0..180).map(|k| to_xy(2.0 * PI * k as f64 / 180.0, rms)).collect();
    polyline(&mut out, &circle, "#555555", true, true);
    let mut sorted: Vec<&(f64, f64, f64)> = rows.iter().filter(|r| r.1.is_finite() && r.2.is_finite()).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (idx, color) in [(1usize, COLORS[0]), (2, COLORS[1])] {
        let pts: Vec<(f64, f64)> = sorted.iter().map(|r| to_xy(r.0, if idx == 1 { r.1 } else { r.2 })).collect();
        polyline(&mut out, &pts, color, pts.len() > 2, false);
        for (x, y) in &pts {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
        }
    }
    legend(&mut out, 10.0, 40.0, &[("q_lower", COLORS[0]), ("q_upper", COLORS[1]), ("rms mean", "#555555")]);
    out.push_str("</svg>\n");
    out
}

/// Obstacle and fronts in the plane, equal axis scaling.
pub fn shape_overlay(obstacle: &[[f64; 2]], fronts: &[(String, Vec<[f64; 2]>)]) -> String {
    let (w, h) = (560.0, 600.0);
    let all = obstacle.iter().chain(fronts.iter().flat_map(|f| f.1.iter()));
    let extent = all.fold(1e-12f64, |m, p| m.max(p[0].abs()).max(p[1].abs())) * 1.05;
    let (cx, cy, half) = (280.0, 320.0, 260.0);
    let to_xy = |p: &[f64; 2]| (cx + half * p[0] / extent, cy - half * p[1] / extent);
    let mut out = String::new();
    header(&mut out, w, h, "fronts around the obstacle");
    let _ = writeln!(out, r##"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}" stroke="#dddddd"/>"##, cx - half, cx + half);
    let _ = writeln!(out, r##"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="#dddddd"/>"##, cy - half, cy + half);
    let obs: Vec<(f64, f64)> = obstacle.iter().map(to_xy).collect();
    let coords: Vec<String> = obs.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(out, r##"<polygon points="{}" fill="#cccccc" stroke="black"/>"##, coords.join(" "));
    let mut entries = Vec::new();
    for (k, (label, pts)) in fronts.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let xy: Vec<(f64, f64)> = pts.iter().map(to_xy).collect();
        polyline(&mut out, &xy, color, true, false);
        entries.push((label.as_str(), color));
    }
    legend(&mut out, 10.0, 40.0, &entries);
    out.push_str("</svg>\n");
    out
}
