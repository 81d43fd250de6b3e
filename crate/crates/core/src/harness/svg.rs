//! Minimal self-contained SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

pub const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    pub fill: Option<&'static str>,
}

impl Series {
    pub fn line(name: impl Into<String>, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), color, points, closed: false, fill: None }
    }

    pub fn region(name: impl Into<String>, color: &'static str, points: Vec<(f64, f64)>, fill: &'static str) -> Self {
        Self { name: name.into(), color, points, closed: true, fill: Some(fill) }
    }
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Equal scale on both axes.
    pub equal_aspect: bool,
    pub series: Vec<Series>,
    pub markers: Vec<(f64, f64, String)>,
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Range covering every point of `series`, padded by 5%.
pub fn auto_range(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = xs;
    for (x, y) in series.iter().flat_map(|s| s.points.iter().copied()) {
        xs = (xs.0.min(x), xs.1.max(x));
        ys = (ys.0.min(y), ys.1.max(y));
    }
    if !xs.0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    (padded(xs.0, xs.1), padded(ys.0, ys.1))
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let (mut x0, mut x1) = self.x_range;
        let (mut y0, mut y1) = self.y_range;
        let pw = WIDTH - 2.0 * MARGIN;
        let ph = HEIGHT - 2.0 * MARGIN;
        if self.equal_aspect {
            let scale = (pw / (x1 - x0)).min(ph / (y1 - y0));
            let cx = 0.5 * (x0 + x1);
            let cy = 0.5 * (y0 + y1);
            x0 = cx - 0.5 * pw / scale;
            x1 = cx + 0.5 * pw / scale;
            y0 = cy - 0.5 * ph / scale;
            y1 = cy + 0.5 * ph / scale;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, esc(&self.title));
        let _ = writeln!(s, r##"<g stroke="#ddd" stroke-width="1">"##);
        for t in ticks(x0, x1) {
            let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#, sx(t), MARGIN, HEIGHT - MARGIN);
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(s, r#"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}"/>"#, sy(t), MARGIN, WIDTH - MARGIN);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g fill="black">"#);
        for t in ticks(x0, x1) {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(t), HEIGHT - MARGIN + 16.0, fmt_tick(t));
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN - 6.0, sy(t) + 4.0, fmt_tick(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            HEIGHT / 2.0,
            esc(&self.y_label)
        );
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(s, r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}"/></clipPath>"#);
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for series in &self.series {
            if series.points.is_empty() {
                continue;
            }
            let pts: Vec<String> =
                series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let tag = if series.closed { "polygon" } else { "polyline" };
            let fill = series.fill.unwrap_or("none");
            let _ = writeln!(
                s,
                r#"<{tag} points="{}" fill="{fill}" fill-opacity="0.25" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                series.color
            );
        }
        for (x, y, label) in &self.markers {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, sx(*x), sy(*y));
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, sx(*x) + 6.0, sy(*y) - 6.0, esc(label));
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="116" height="{}" fill="white" fill-opacity="0.8"/>"#,
            WIDTH - MARGIN - 114.0,
            MARGIN + 2.0,
            14.0 * self.series.len() as f64 + 6.0
        );
        for (i, series) in self.series.iter().enumerate() {
            let y = MARGIN + 14.0 + 14.0 * i as f64;
            let x = WIDTH - MARGIN - 110.0;
            let _ = writeln!(s, r#"<line x1="{x}" y1="{0}" x2="{1}" y2="{0}" stroke="{2}" stroke-width="3"/>"#, y - 4.0, x + 16.0, series.color);
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 20.0, esc(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range_with_round_steps() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        let t = ticks(-1.3, 7.9);
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&6.0));
    }

    #[test]
    fn render_is_well_formed_and_escaped() {
        let chart = Chart {
            title: "a < b".into(),
            x_label: "t".into(),
            y_label: "u".into(),
            x_range: (0.0, 1.0),
            y_range: (-1.0, 1.0),
            equal_aspect: false,
            series: vec![Series::line("u1", PALETTE[0], vec![(0.0, 0.0), (1.0, 1.0)])],
            markers: vec![(0.5, 0.5, "start".into())],
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<polyline"));
    }
}
