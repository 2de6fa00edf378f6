//! Minimal SVG line charts and heatmaps. Every figure embeds the plotted
//! numbers as a CSV table inside an XML comment so it can be checked against
//! `results.csv`.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Comment bodies may not contain `--`.
fn comment_safe(s: &str) -> String {
    s.replace("--", "- -")
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    /// Fixed y range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    /// Optional horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
}

fn header(out: &mut String, title: &str, data_csv: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<!-- data\n{}-->", comment_safe(data_csv));
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        esc(title)
    );
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, fixed: Option<(f64, f64)>) -> Self {
        if let Some((lo, hi)) = fixed {
            return Self { lo, hi, log };
        }
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = lo.log10().floor();
            hi = hi.log10().ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let step = ((b - a) as f64 / 8.0).ceil().max(1.0) as i32;
            (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0).collect()
        }
    }
}

impl LineChart {
    pub fn render(&self, data_csv: &str) -> String {
        let mut out = String::new();
        header(&mut out, &self.title, data_csv);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let xa = Axis::new(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), self.log_x, None);
        let ya = Axis::new(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .chain(self.hlines.iter().map(|h| h.0)),
            self.log_y,
            self.y_range,
        );
        let px = |x: f64| LEFT + pw * xa.frac(x);
        let py = |y: f64| TOP + ph * (1.0 - ya.frac(y));
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for t in xa.ticks() {
            let x = px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                fmt_num(t)
            );
        }
        for t in ya.ticks() {
            let y = py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                fmt_num(t)
            );
        }
        for (y, label) in &self.hlines {
            let yy = py(*y);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#888" stroke-dasharray="2,3"/><text x="{:.2}" y="{:.2}" fill="#666">{}</text>"##,
                LEFT + pw,
                LEFT + 4.0,
                yy - 4.0,
                esc(label)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"{dash}/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{colour}"/>"#);
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                esc(&s.label)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 18.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

/// Heatmap of values in `[0, 1]` with rows `row_values` (bottom to top) and
/// columns `col_values`, plus optional polylines in cell coordinates.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub row_values: Vec<f64>,
    pub col_values: Vec<f64>,
    /// `values[row][col]`.
    pub values: Vec<Vec<f64>>,
    /// Curves given in fractional cell indices `(col, row)`.
    pub curves: Vec<(String, Vec<(f64, f64)>)>,
}

fn shade(v: f64) -> String {
    // white to dark blue
    let t = v.clamp(0.0, 1.0);
    let r = (247.0 - t * (247.0 - 8.0)).round() as u8;
    let g = (251.0 - t * (251.0 - 48.0)).round() as u8;
    let b = (255.0 - t * (255.0 - 107.0)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl Heatmap {
    pub fn render(&self, data_csv: &str) -> String {
        let mut out = String::new();
        header(&mut out, &self.title, data_csv);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let (nr, nc) = (self.row_values.len().max(1), self.col_values.len().max(1));
        let cw = pw / nc as f64;
        let ch = ph / nr as f64;
        let cx = |c: f64| LEFT + cw * (c + 0.5);
        let cy = |r: f64| TOP + ph - ch * (r + 0.5);
        for (r, row) in self.values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let (x, y) = (LEFT + cw * c as f64, TOP + ph - ch * (r + 1) as f64);
                let _ = writeln!(
                    out,
                    r##"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}" stroke="#fff"/>"##,
                    shade(v)
                );
                let colour = if v > 0.55 { "#fff" } else { "#222" };
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{colour}">{}</text>"#,
                    cx(c as f64),
                    cy(r as f64) + 4.0,
                    fmt_num(v)
                );
            }
        }
        for (c, v) in self.col_values.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                cx(c as f64),
                TOP + ph + 16.0,
                fmt_num(*v)
            );
        }
        for (r, v) in self.row_values.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                cy(r as f64) + 4.0,
                fmt_num(*v)
            );
        }
        for (k, (label, pts)) in self.curves.iter().enumerate() {
            let colour = PALETTE[(k + 1) % PALETTE.len()];
            let path: Vec<String> = pts
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(c, r)| format!("{:.2},{:.2}", cx(c), cy(r)))
                .collect();
            if path.len() >= 2 {
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2.5" stroke-dasharray="7,4"/>"#,
                    path.join(" ")
                );
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2.5" stroke-dasharray="7,4"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                esc(label)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 18.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

/// The CSV table embedded in a rendered figure.
pub fn embedded_data(svg: &str) -> Option<String> {
    let start = svg.find("<!-- data\n")? + "<!-- data\n".len();
    let end = svg[start..].find("-->")? + start;
    Some(svg[start..end].replace("- -", "--"))
}
