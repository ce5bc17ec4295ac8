//! Standalone SVG line plots built from text.

use std::fmt::Write as _;
use std::path::Path;

use crate::output::{write_atomic, OutputError};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Vertical annotated line at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("plot has no series")]
    NoSeries,
    #[error("series {0:?} needs at least two finite points")]
    EmptySeries(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Tick step from {1, 2, 5}·10^k giving at most about `target` intervals.
fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let n = raw / mag;
    let m = if n <= 1.0 {
        1.0
    } else if n <= 2.0 {
        2.0
    } else if n <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo, 6);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{:.*}", decimals, v);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Render `plot` to SVG text. Non-finite points are dropped.
pub fn svg_lineplot(plot: &LinePlot) -> Result<String, PlotError> {
    if plot.series.is_empty() {
        return Err(PlotError::NoSeries);
    }
    let series: Vec<(&str, Vec<(f64, f64)>)> = plot
        .series
        .iter()
        .map(|s| {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if pts.len() < 2 {
                Err(PlotError::EmptySeries(s.name.clone()))
            } else {
                Ok((s.name.as_str(), pts))
            }
        })
        .collect::<Result<_, _>>()?;

    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        (x0, x1) = padded_range(x0, x1);
    }
    let (y0, y1) = padded_range(y0, y1);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !plot.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&plot.title)
        );
    }

    // axes and ticks
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let xstep = tick_step(x1 - x0, 6);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 19.0,
            tick_label(t, xstep)
        );
    }
    let ystep = tick_step(y1 - y0, 6);
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t, ystep)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    for m in plot.markers.iter().filter(|m| m.x >= x0 && m.x <= x1) {
        let x = sx(m.x);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#777777" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" font-size="10" fill="#555555">{}</text>"##,
            TOP + ph,
            x + 2.0,
            TOP + 11.0,
            escape(&m.label)
        );
    }

    for (i, (_, pts)) in series.iter().enumerate() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            coords.join(" ")
        );
    }

    // legend, top right inside the frame
    let lx = LEFT + pw - 150.0;
    for (i, (name, _)) in series.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 22.0,
            COLORS[i % COLORS.len()],
            lx + 28.0,
            y + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_svg_lineplot(plot: &LinePlot, path: &Path) -> Result<(), PlotError> {
    let svg = svg_lineplot(plot)?;
    write_atomic(path, svg.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(name: &str, pts: &[(f64, f64)]) -> Series {
        Series {
            name: name.into(),
            points: pts.to_vec(),
        }
    }

    #[test]
    fn two_points_one_polyline() {
        let plot = LinePlot {
            series: vec![series("a", &[(0.0, 0.0), (1.0, 1.0)])],
            ..Default::default()
        };
        let svg = svg_lineplot(&plot).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(pts.split(' ').all(|p| p.split(',').count() == 2));
    }

    #[test]
    fn three_series_three_legend_entries() {
        let plot = LinePlot {
            title: "height".into(),
            series: ["2.8i", "1.5i", "0.5i"]
                .iter()
                .enumerate()
                .map(|(k, n)| series(n, &[(0.0, k as f64), (1.0, k as f64 + 0.5), (2.0, k as f64)]))
                .collect(),
            ..Default::default()
        };
        let svg = svg_lineplot(&plot).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        for n in ["2.8i", "1.5i", "0.5i"] {
            assert_eq!(svg.matches(&format!(">{n}</text>")).count(), 1);
        }
    }

    #[test]
    fn deterministic() {
        let plot = LinePlot {
            series: vec![series("a", &[(0.1, 3.0), (0.7, -1.0), (1.9, 2.5)])],
            markers: vec![Marker {
                x: 0.7,
                label: "collision".into(),
            }],
            ..Default::default()
        };
        assert_eq!(svg_lineplot(&plot).unwrap(), svg_lineplot(&plot).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        render_svg_lineplot(&plot, &a).unwrap();
        render_svg_lineplot(&plot, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn markers_are_dashed_lines_with_labels() {
        let plot = LinePlot {
            series: vec![series("a", &[(0.0, 1.0), (10.0, 2.0)])],
            markers: vec![
                Marker { x: 4.0, label: "reflection".into() },
                Marker { x: 40.0, label: "outside".into() },
            ],
            ..Default::default()
        };
        let svg = svg_lineplot(&plot).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(svg.contains(">reflection</text>"));
        assert!(!svg.contains("outside"));
    }

    #[test]
    fn short_series_rejected() {
        let plot = LinePlot {
            series: vec![series("a", &[(0.0, 1.0), (1.0, f64::NAN)])],
            ..Default::default()
        };
        assert!(matches!(svg_lineplot(&plot), Err(PlotError::EmptySeries(n)) if n == "a"));
        assert!(matches!(svg_lineplot(&LinePlot::default()), Err(PlotError::NoSeries)));
    }

    #[test]
    fn text_is_escaped() {
        let plot = LinePlot {
            title: "a<b & c".into(),
            series: vec![series("x", &[(0.0, 0.0), (1.0, 0.0)])],
            ..Default::default()
        };
        assert!(svg_lineplot(&plot).unwrap().contains("a&lt;b &amp; c"));
    }

    #[test]
    fn tick_steps() {
        for (span, step) in [(1.0, 0.2), (2000.0, 500.0), (0.03, 0.005), (7.0, 2.0)] {
            assert!((tick_step(span, 6) / step - 1.0).abs() < 1e-9, "{span}");
        }
        assert_eq!(tick_label(0.4, 0.2), "0.4");
        assert_eq!(tick_label(-0.0, 0.2), "0.0");
        assert_eq!(tick_label(1500.0, 500.0), "1500");
    }
}
