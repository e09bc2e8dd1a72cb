//! Minimal standalone SVG point charts with interval whiskers.

use std::fmt::Write;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub label: String,
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 60.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#8e5572", "#edae49", "#444444"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Categories on the x axis come from the first series; later series are
/// matched by label and offset slightly so whiskers do not overlap.
pub fn render_svg(chart: &Chart) -> String {
    let labels: Vec<&str> = chart
        .series
        .first()
        .map(|s| s.points.iter().map(|p| p.label.as_str()).collect())
        .unwrap_or_default();
    let finite = chart
        .series
        .iter()
        .flat_map(|s| &s.points)
        .flat_map(|p| [p.value, p.low, p.high])
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    let (ml, mr, mt, mb) = MARGIN;
    let plot_w = WIDTH - ml - mr;
    let plot_h = HEIGHT - mt - mb;
    let y = |v: f64| mt + plot_h * (1.0 - (v - lo) / (hi - lo));
    let slot = plot_w / labels.len().max(1) as f64;
    let x = |i: usize, s: usize| {
        let spread = (chart.series.len() as f64 - 1.0).max(0.0);
        ml + slot * (i as f64 + 0.5) + (s as f64 - spread / 2.0) * 8.0
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/><line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        mt + plot_h,
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text><line x1="{ml}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="#ddd"/>"##,
            ml - 4.0,
            y(v) + 4.0,
            v,
            y(v),
            ml + plot_w,
            y(v)
        );
    }
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x(i, 0),
            mt + plot_h + 16.0,
            escape(l)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        ml + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        mt + plot_h / 2.0,
        mt + plot_h / 2.0,
        escape(&chart.y_label)
    );
    for (s, series) in chart.series.iter().enumerate() {
        let color = COLORS[s % COLORS.len()];
        for p in &series.points {
            let Some(i) = labels.iter().position(|l| *l == p.label) else {
                continue;
            };
            if !p.value.is_finite() {
                continue;
            }
            let cx = x(i, s);
            if p.low.is_finite() && p.high.is_finite() {
                let _ = writeln!(
                    out,
                    r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/>"#,
                    y(p.low),
                    y(p.high)
                );
            }
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.1}" cy="{:.1}" r="3.5" fill="{color}"/>"#,
                y(p.value)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            ml + 8.0,
            mt + 14.0 + 14.0 * s as f64,
            escape(&series.name)
        );
    }
    out.push_str("</svg>\n");
    out
}
