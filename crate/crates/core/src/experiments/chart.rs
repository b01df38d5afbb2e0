//! SVG chart of relative error against samples per node.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::report::BoundCurve;
use super::results::SweepRecord;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Renders the chart: one scatter series and one solid bound curve per
/// bin-width percentage, on a logarithmic error axis.
pub fn render_chart(records: &[SweepRecord], curves: &[BoundCurve]) -> Result<String> {
    let points: Vec<&SweepRecord> = records.iter().filter(|r| r.succeeded() && r.rel_err > 0.0).collect();
    if points.is_empty() {
        return Err(Error::DegenerateInput("no positive errors to chart".into()));
    }
    if curves.is_empty() {
        return Err(Error::DegenerateInput("no bound curves to chart".into()));
    }

    let xs = points.iter().map(|r| r.s as f64).chain(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0 as f64)));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 1.0, x_hi + 1.0) };
    let ys = points
        .iter()
        .map(|r| r.rel_err)
        .chain(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)))
        .filter(|y| *y > 0.0 && y.is_finite());
    let (y_lo, y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let dec_lo = y_lo.log10().floor() as i32;
    let dec_hi = (y_hi.log10().ceil() as i32).max(dec_lo + 1);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (dec_hi as f64 - y.log10()) / (dec_hi - dec_lo) as f64 * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let _ = writeln!(svg, r##"<g class="grid" stroke="#dddddd" stroke-width="1">"##);
    for d in dec_lo..=dec_hi {
        let y = py(10f64.powi(d));
        let _ = writeln!(svg, r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, LEFT + plot_w);
    }
    let x_ticks = nice_ticks(x_lo, x_hi);
    for &t in &x_ticks {
        let x = px(t);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}"/>"#, TOP + plot_h);
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(svg, r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}"/>"#);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="tick-labels">"#);
    for d in dec_lo..=dec_hi {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">10<tspan dy="-6" font-size="10">{d}</tspan></text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    for &t in &x_ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            px(t),
            TOP + plot_h + 20.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">samples per node s</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">relative error ‖ŵ − w⋆‖₂ / ‖w⋆‖₂</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, curve) in curves.iter().enumerate() {
        let c = color(k);
        let _ = writeln!(svg, r#"<g class="scatter" data-delta-pct="{}" fill="{c}" fill-opacity="0.6">"#, curve.delta_pct);
        for r in points.iter().filter(|r| r.delta_pct == curve.delta_pct) {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, px(r.s as f64), py(r.rel_err));
        }
        let _ = writeln!(svg, "</g>");
        let path: Vec<String> = curve
            .points
            .iter()
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
            .map(|&(s, b)| format!("{:.2},{:.2}", px(s as f64), py(b)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="bound" data-delta-pct="{}" fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#,
            curve.delta_pct,
            path.join(" ")
        );
    }

    let lx = LEFT + plot_w + 20.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (k, curve) in curves.iter().enumerate() {
        let y = TOP + 10.0 + 40.0 * k as f64;
        let c = color(k);
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{y:.2}" r="3.5" fill="{c}"/>"#, lx + 12.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">Δ = {}% error</text>"#,
            lx + 30.0,
            y + 4.0,
            curve.delta_pct
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#,
            y + 18.0,
            lx + 24.0,
            y + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">Δ = {}% bound</text>"#,
            lx + 30.0,
            y + 22.0,
            curve.delta_pct
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes the chart. Nothing is written if rendering fails.
pub fn emit_chart(records: &[SweepRecord], curves: &[BoundCurve], path: &Path) -> Result<()> {
    let svg = render_chart(records, curves)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Round tick values covering `[lo, hi]`, about six of them.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}
