//! Minimal log-log SVG plots. Output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::path::Path;

use super::config::Axis;
use super::records::TrialRecord;
use super::scaling::aggregate_by;
use crate::error::{Error, Result};

/// A named curve; points with non-positive coordinates are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn positive(points: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points
        .iter()
        .copied()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
}

fn log_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(exp: i32) -> String {
    if (-3..=4).contains(&exp) {
        format!("{}", 10f64.powi(exp))
    } else {
        format!("1e{exp}")
    }
}

/// Scatter of `data` series with `overlays` drawn as dashed lines.
pub fn render_svg(data: &[Series], overlays: &[Series], x_label: &str, y_label: &str) -> Result<String> {
    let all: Vec<(f64, f64)> = data
        .iter()
        .chain(overlays)
        .flat_map(|s| positive(&s.points).collect::<Vec<_>>())
        .collect();
    if all.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let (x0, x1) = log_range(all.iter().map(|p| p.0));
    let (y0, y1) = log_range(all.iter().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for e in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = LEFT + (e as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 15.0,
            tick_label(e)
        );
    }
    for e in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = TOP + (y1 - e as f64) / (y1 - y0) * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 5.0,
            y + 4.0,
            tick_label(e)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    );

    let mut legend_y = TOP + 10.0;
    let legend_x = LEFT + pw + 15.0;
    for (i, series) in data.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for (x, y) in positive(&series.points) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            legend_x + 10.0,
            legend_y - 4.0,
            legend_x + 22.0,
            legend_y,
            esc(&series.name)
        );
        legend_y += 16.0;
    }
    for (i, series) in overlays.iter().enumerate() {
        let color = PALETTE[(data.len() + i) % PALETTE.len()];
        let pts: Vec<String> = positive(&series.points)
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3"/>"#,
                pts.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            legend_x,
            legend_y - 4.0,
            legend_x + 18.0,
            legend_y - 4.0,
            legend_x + 22.0,
            legend_y,
            esc(&series.name)
        );
        legend_y += 16.0;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// One scatter series per method: mean excess risk against `axis`.
pub fn method_series(records: &[TrialRecord], axis: Axis) -> Vec<Series> {
    let mut methods = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| Series {
            name: m.to_string(),
            points: aggregate_by(records, axis, |r| r.method == m)
                .into_iter()
                .map(|p| (p.x, p.mean))
                .collect(),
        })
        .collect()
}

/// Writes the log-log plot of `records` along `axis` with `overlays`.
pub fn emit_plot(records: &[TrialRecord], axis: Axis, overlays: &[Series], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let svg = render_svg(&method_series(records, axis), overlays, axis.name(), "mean excess risk")?;
    std::fs::write(path, svg)?;
    Ok(())
}
