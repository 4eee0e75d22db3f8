//! Minimal SVG output: accuracy heatmaps with iso-contours and line charts.

use std::fmt::Write;

use crate::experiments::SweepGrid;
use crate::stimuli::TestOrder;

pub const CONTOUR_LEVELS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

const CELL: f64 = 56.0;
const MARGIN: f64 = 70.0;
const PALETTE: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];
const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Monotone map of `[0, 1]` onto a dark-to-light ramp.
pub fn accuracy_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let i = PALETTE
        .iter()
        .rposition(|(s, _)| *s <= v)
        .unwrap_or(0)
        .min(PALETTE.len() - 2);
    let (s0, c0) = PALETTE[i];
    let (s1, c1) = PALETTE[i + 1];
    let t = (v - s0) / (s1 - s0);
    let mix = |a: u8, b: u8| (f64::from(a) + t * (f64::from(b) - f64::from(a))).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
}

fn text(out: &mut String, x: f64, y: f64, size: f64, anchor: &str, body: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{body}</text>"#
    );
}

/// Line segments of the `level` iso-line through a grid of values sampled
/// at cell centers. Squares with a missing corner are skipped.
pub fn marching_squares(values: &[Vec<Option<f64>>], level: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mut segs = Vec::new();
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let corners = [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)];
            let Some(v) = corners
                .iter()
                .map(|&(i, j)| values[i][j])
                .collect::<Option<Vec<f64>>>()
            else {
                continue;
            };
            let pts: Vec<(f64, f64)> = (0..4)
                .filter_map(|e| {
                    let (a, b) = (e, (e + 1) % 4);
                    let (va, vb) = (v[a], v[b]);
                    if (va >= level) == (vb >= level) {
                        return None;
                    }
                    let t = (level - va) / (vb - va);
                    let (ra, ca) = corners[a];
                    let (rb, cb) = corners[b];
                    Some((
                        ra as f64 + t * (rb as f64 - ra as f64),
                        ca as f64 + t * (cb as f64 - ca as f64),
                    ))
                })
                .collect();
            match pts.len() {
                2 => segs.push((pts[0], pts[1])),
                4 => {
                    segs.push((pts[0], pts[1]));
                    segs.push((pts[2], pts[3]));
                }
                _ => {}
            }
        }
    }
    segs
}

/// Heatmap of mean accuracy over N (rows) x K (columns) for one test order.
/// Cells without results are drawn black and labeled N/A.
pub fn heatmap_svg(grid: &SweepGrid, order: TestOrder, title: &str) -> String {
    let rows = grid.n_values.len();
    let cols = grid.k_values.len();
    let width = MARGIN * 2.0 + cols as f64 * CELL;
    let height = MARGIN * 2.0 + rows as f64 * CELL;
    let mut out = String::new();
    header(&mut out, width, height);
    text(&mut out, width / 2.0, 28.0, 15.0, "middle", title);
    let mut values = vec![vec![None; cols]; rows];
    for (i, &n) in grid.n_values.iter().enumerate() {
        for (j, &k) in grid.k_values.iter().enumerate() {
            let x = MARGIN + j as f64 * CELL;
            let y = MARGIN + i as f64 * CELL;
            let mean = grid.cell(n, k).and_then(|c| c.order_mean(order));
            values[i][j] = mean;
            let (fill, label, ink) = match mean {
                Some(m) => (
                    accuracy_color(m),
                    format!("{m:.2}"),
                    if m > 0.6 { "black" } else { "white" },
                ),
                None => ("#000000".to_string(), "N/A".to_string(), "white"),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"/>"#
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" fill="{ink}">{label}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
        text(
            &mut out,
            MARGIN - 8.0,
            MARGIN + (i as f64 + 0.5) * CELL + 4.0,
            12.0,
            "end",
            &n.to_string(),
        );
    }
    for (j, &k) in grid.k_values.iter().enumerate() {
        text(
            &mut out,
            MARGIN + (j as f64 + 0.5) * CELL,
            MARGIN - 8.0,
            12.0,
            "middle",
            &k.to_string(),
        );
    }
    text(
        &mut out,
        width / 2.0,
        MARGIN - 28.0,
        12.0,
        "middle",
        "K (examples per category)",
    );
    text(&mut out, 18.0, height / 2.0, 12.0, "middle", "N");
    for level in CONTOUR_LEVELS {
        for ((r0, c0), (r1, c1)) in marching_squares(&values, level) {
            let p = |r: f64, c: f64| (MARGIN + (c + 0.5) * CELL, MARGIN + (r + 0.5) * CELL);
            let (x0, y0) = p(r0, c0);
            let (x1, y1) = p(r1, c1);
            let _ = writeln!(
                out,
                r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#ffffff" stroke-width="{:.1}" stroke-dasharray="4,2"/>"##,
                if (level - 0.7).abs() < 1e-9 { 2.5 } else { 1.0 }
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Polyline chart of several series on shared axes.
pub fn line_chart_svg(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let (w, h) = (560.0, 380.0);
    let (left, right, top, bottom) = (64.0, 150.0, 40.0, 50.0);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;
    let mut out = String::new();
    header(&mut out, w, h);
    text(&mut out, left + pw / 2.0, 24.0, 15.0, "middle", title);
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in 0..=4 {
        let f = f64::from(t) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        text(
            &mut out,
            sx(xv),
            top + ph + 16.0,
            11.0,
            "middle",
            &format!("{xv:.3}"),
        );
        text(
            &mut out,
            left - 6.0,
            sy(yv) + 4.0,
            11.0,
            "end",
            &format!("{yv:.3}"),
        );
    }
    text(&mut out, left + pw / 2.0, h - 12.0, 12.0, "middle", x_label);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + i as f64 * 18.0;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            w - right + 10.0,
            w - right + 30.0
        );
        text(
            &mut out,
            w - right + 36.0,
            ly + 4.0,
            11.0,
            "start",
            &s.label,
        );
    }
    out.push_str("</svg>\n");
    out
}
