//! Minimal SVG charts: line/marker series on linear or log axes, and a
//! binned heatmap.

use std::fmt::Write as _;

use ndarray::Array2;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points, style: Style::Line }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points, style: Style::Markers }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    s
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-300 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Axis { lo: lo - pad, hi: hi + pad, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn label(&self, t: f64) -> String {
        let v = self.lo + t * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let (l, r, t, b) = MARGIN;
        let (pw, ph) = (WIDTH - l - r, HEIGHT - t - b);
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let ax = Axis::fit(all().map(|p| p.0), self.log_x);
        let ay = Axis::fit(all().map(|p| p.1), self.log_y);
        let px = |x: f64| ax.unit(x).map(|u| l + u * pw);
        let py = |y: f64| ay.unit(y).map(|u| t + (1.0 - u) * ph);

        let mut s = open(&self.title);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (gx, gy) = (l + f * pw, t + (1.0 - f) * ph);
            let _ = writeln!(s, r##"<line x1="{gx:.1}" y1="{t}" x2="{gx:.1}" y2="{}" stroke="#ddd"/>"##, t + ph);
            let _ = writeln!(s, r##"<line x1="{l}" y1="{gy:.1}" x2="{}" y2="{gy:.1}" stroke="#ddd"/>"##, l + pw);
            let _ = writeln!(s, r#"<text x="{gx:.1}" y="{}" text-anchor="middle">{}</text>"#, t + ph + 16.0, ax.label(f));
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 4.0, gy + 4.0, ay.label(f));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, l + pw / 2.0, HEIGHT - 10.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            t + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> =
                series.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
            match series.style {
                Style::Line => {
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                }
                Style::Markers => {
                    for (x, y) in pts {
                        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#);
                    }
                }
            }
            let ly = t + 14.0 + 16.0 * k as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, l + 8.0, ly - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, l + 22.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Block-averages `m` to at most `max_cells` per side and draws it on a
/// diverging scale symmetric about zero.
pub fn heatmap(title: &str, m: &Array2<f64>, max_cells: usize) -> String {
    let n = m.nrows().max(1);
    let bins = n.min(max_cells.max(1));
    let mut cells = Array2::<f64>::zeros((bins, bins));
    let mut counts = Array2::<f64>::zeros((bins, bins));
    for ((i, j), &v) in m.indexed_iter() {
        let (bi, bj) = (i * bins / n, j * bins / n);
        cells[[bi, bj]] += v;
        counts[[bi, bj]] += 1.0;
    }
    let cells = cells / counts.mapv(|c: f64| c.max(1.0));
    let scale = cells.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let (l, t) = (MARGIN.0, MARGIN.2);
    let side = (HEIGHT - t - MARGIN.3).min(WIDTH - l - MARGIN.1);
    let w = side / bins as f64;
    let mut s = open(title);
    for ((i, j), &v) in cells.indexed_iter() {
        let a = (v / scale).clamp(-1.0, 1.0);
        let (rr, gg, bb) = if a >= 0.0 {
            (255.0, 255.0 * (1.0 - a), 255.0 * (1.0 - a))
        } else {
            (255.0 * (1.0 + a), 255.0 * (1.0 + a), 255.0)
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})"/>"#,
            l + j as f64 * w,
            t + i as f64 * w,
            w + 0.05,
            w + 0.05,
            rr.round(),
            gg.round(),
            bb.round()
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">max |value| = {scale:.3e}</text>"#, l, t + side + 20.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let c = Chart::new("t <x>", "x", "y")
            .with(Series::line("a", vec![(0.0, 1.0), (1.0, 2.0)]))
            .with(Series::markers("b", vec![(0.5, f64::NAN), (0.2, 1.5)]));
        let svg = c.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;x&gt;"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn log_axis_skips_nonpositive() {
        let mut c = Chart::new("t", "x", "y").with(Series::markers("a", vec![(1.0, 0.0), (2.0, 1e-3), (3.0, 1.0)]));
        c.log_y = true;
        assert_eq!(c.render().matches("<circle").count(), 2);
    }

    #[test]
    fn heatmap_bins() {
        let m = Array2::from_shape_fn((10, 10), |(i, j)| i as f64 - j as f64);
        assert_eq!(heatmap("h", &m, 4).matches("<rect x=").count(), 16);
    }
}
