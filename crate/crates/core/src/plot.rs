//! Static SVG line plots of log-counts against stages.

use std::fmt::Write;

use crate::dimension::{DimTrend, LogCount};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub trend: &'a DimTrend,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per series; stages where a set is empty have log-count −∞
/// and are left as gaps, which the legend notes.
pub fn svg(title: &str, series: &[Series<'_>]) -> String {
    let points: Vec<(usize, f64)> = series
        .iter()
        .flat_map(|s| s.trend.rows())
        .filter_map(|(stage, _, l)| match l {
            LogCount::Finite(v) => Some((stage, v)),
            LogCount::NegInfinity => None,
        })
        .collect();
    let stages = series.iter().flat_map(|s| [s.trend.first_stage, s.trend.last_stage()]);
    let x0 = stages.clone().min().unwrap_or(0) as f64;
    let x1 = (stages.max().unwrap_or(1) as f64).max(x0 + 1.0);
    let y0 = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0);
    let mut y1 = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !y1.is_finite() || y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">stage</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">log count</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, text) in [(x0, x0), (x1, x1)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{text}</text>"#,
            px(v),
            bottom + 16.0
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            left - 6.0,
            py(v) + 4.0
        );
    }

    let mut any_gap = false;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (stage, _, l) in s.trend.rows() {
            match l {
                LogCount::Finite(v) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{:.1} {:.1} ", px(stage as f64), py(v));
                    pen_down = true;
                }
                LogCount::NegInfinity => {
                    any_gap = true;
                    pen_down = false;
                }
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                d.trim_end()
            );
        }
        let ly = top + 8.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            right - 150.0,
            right - 130.0,
            right - 124.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    if any_gap {
        let ly = top + 8.0 + 16.0 * series.len() as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-style="italic">gap: empty set (log count -inf)</text>"#,
            right - 150.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
