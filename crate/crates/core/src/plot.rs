//! Minimal log-log line plots rendered as standalone SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Thin grey line, one of many.
    Faint,
    /// Thick highlighted line.
    Bold,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            label: label.into(),
            points,
            style,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Decade-aligned range covering the positive values.
fn decades(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return None;
    }
    let (a, mut b) = (lo.floor() as i32, hi.ceil() as i32);
    if b == a {
        b += 1;
    }
    Some((a, b))
}

/// Renders the series on log-log axes. Points with a non-positive
/// coordinate are dropped. Output depends only on the inputs.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xr = decades(all().filter(|p| p.1 > 0.0).map(|p| p.0)).unwrap_or((0, 1));
    let yr = decades(all().filter(|p| p.0 > 0.0).map(|p| p.1)).unwrap_or((0, 1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - xr.0 as f64) / (xr.1 - xr.0) as f64 * pw;
    let sy = |y: f64| TOP + ph - (y.log10() - yr.0 as f64) / (yr.1 - yr.0) as f64 * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    for d in xr.0..=xr.1 {
        let x = sx(10f64.powi(d));
        let _ = writeln!(
            out,
            r#"<line class="tick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" {font}>1e{d}</text>"#,
            TOP + ph + 20.0
        );
    }
    for d in yr.0..=yr.1 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            out,
            r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" {font}>1e{d}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" {font}>{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})" {font}>{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let (class, stroke, width) = match s.style {
            Style::Faint => ("faint", "#9a9a9a", 0.8),
            Style::Bold => ("bold", "#c0392b", 2.2),
            Style::Plain => ("plain", "#1f4e9c", 1.4),
        };
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="{width}" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
