//! Self-contained SVG figures: ratio curves and labelled scatter plots.
//!
//! Ratio-curve layout: the canvas is `WIDTH × HEIGHT` with margins
//! `LEFT`, `RIGHT`, `TOP`, `BOTTOM`. With `u = log_b(d′)`, a point
//! `(d′, v)` maps to
//!
//! ```text
//! x = LEFT + (u − u_min) / (u_max − u_min) · (WIDTH − LEFT − RIGHT)
//! y = TOP + (1 − v / y_max) · (HEIGHT − TOP − BOTTOM)
//! ```
//!
//! where `y_max = max(1.2, 1.1 · largest ratio)`. A single distinct `d′`
//! is drawn at the horizontal centre of the plot area.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data_io::LabelVector;
use crate::error::{param, Result};
use crate::evaluation::RatioRow;
use crate::tsne::Embedding;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
pub const LEFT: f64 = 64.0;
pub const RIGHT: f64 = 24.0;
pub const TOP: f64 = 24.0;
pub const BOTTOM: f64 = 56.0;

pub const TIME_COLOR: &str = "#2ca02c";
pub const ACCURACY_COLOR: &str = "#d62728";

/// Fill colours indexed by `label % 10`.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Scatter plots use a square canvas.
pub const SCATTER_SIZE: f64 = 480.0;
const SCATTER_MARGIN: f64 = 0.05;
const POINT_RADIUS: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    RatioCurves,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub x_label: String,
    pub y_label: String,
    /// Logarithm base of the x axis; ratio curves only.
    pub log_base: f64,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
}

/// Renders a figure description to an SVG document.
pub fn render(spec: &FigureSpec) -> Result<String> {
    match spec.kind {
        FigureKind::RatioCurves => render_ratio(spec),
        FigureKind::Scatter => render_scatter(spec),
    }
}

/// Pixel position of `(d′, v)` on a ratio figure.
pub struct RatioAxes {
    u_min: f64,
    u_max: f64,
    log_base: f64,
    pub y_max: f64,
}

impl RatioAxes {
    pub fn fit(series: &[Series], log_base: f64) -> Self {
        let pts = series.iter().flat_map(|s| s.points.iter());
        let (mut u_min, mut u_max, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &(d, v) in pts {
            let u = d.ln() / log_base.ln();
            u_min = u_min.min(u);
            u_max = u_max.max(u);
            v_max = v_max.max(v);
        }
        Self {
            u_min,
            u_max,
            log_base,
            y_max: (1.1 * v_max).max(1.2),
        }
    }

    pub fn x(&self, d: f64) -> f64 {
        let plot_w = WIDTH - LEFT - RIGHT;
        if self.u_max == self.u_min {
            return LEFT + 0.5 * plot_w;
        }
        let u = d.ln() / self.log_base.ln();
        LEFT + (u - self.u_min) / (self.u_max - self.u_min) * plot_w
    }

    pub fn y(&self, v: f64) -> f64 {
        TOP + (1.0 - v / self.y_max) * (HEIGHT - TOP - BOTTOM)
    }
}

fn render_ratio(spec: &FigureSpec) -> Result<String> {
    if spec.series.is_empty() || spec.series.iter().all(|s| s.points.is_empty()) {
        return Err(param("ratio figure needs at least one non-empty series"));
    }
    if !(spec.log_base > 1.0) {
        return Err(param(format!("log base must exceed 1, got {}", spec.log_base)));
    }
    let axes = RatioAxes::fit(&spec.series, spec.log_base);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let one = axes.y(1.0);
    let _ = writeln!(
        out,
        r#"<line class="reference" x1="{x0}" y1="{one:.2}" x2="{x1}" y2="{one:.2}" stroke="gray" stroke-dasharray="4 3"/>"#
    );

    let ticks: BTreeMap<u64, f64> = spec
        .series
        .iter()
        .flat_map(|s| s.points.iter())
        .map(|&(d, _)| (d.to_bits(), d))
        .collect();
    for &d in ticks.values() {
        let x = axes.x(d);
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{d}</text>"#,
            y1 + 14.0
        );
    }
    let steps = (axes.y_max / 0.25).floor() as usize;
    for i in 0..=steps {
        let v = i as f64 * 0.25;
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v}</text>"#,
            x0 - 6.0,
            axes.y(v) + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="label" x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 12.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text class="label" x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(&spec.y_label)
    );

    for (i, s) in spec.series.iter().enumerate() {
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(d, v)| format!("{:.2},{:.2}", axes.x(d), axes.y(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-name="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            escape(&s.name),
            points.join(" "),
            escape(&s.color)
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{:.2}" y="{:.2}" font-size="11" fill="{}">{}</text>"#,
            x1 - 120.0,
            y0 + 14.0 * (i + 1) as f64,
            escape(&s.color),
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_scatter(spec: &FigureSpec) -> Result<String> {
    let pts = || spec.series.iter().flat_map(|s| s.points.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &(x, y) in pts() {
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    }
    if pts().next().is_none() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let mut range = [(0.0, 0.0); 2];
    for k in 0..2 {
        let extent = hi[k] - lo[k];
        range[k] = if extent > 0.0 {
            (lo[k] - SCATTER_MARGIN * extent, hi[k] + SCATTER_MARGIN * extent)
        } else {
            (lo[k] - 0.5, lo[k] + 0.5)
        };
    }
    let px = |v: f64, k: usize| {
        let t = (v - range[k].0) / (range[k].1 - range[k].0);
        if k == 0 {
            t * SCATTER_SIZE
        } else {
            (1.0 - t) * SCATTER_SIZE
        }
    };
    let mut out = String::new();
    header(&mut out, SCATTER_SIZE, SCATTER_SIZE);
    for s in &spec.series {
        let _ = writeln!(out, r#"<g class="series" data-name="{}" fill="{}">"#, escape(&s.name), escape(&s.color));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="{POINT_RADIUS}"/>"#, px(x, 0), px(y, 1));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Time (green) and accuracy (red) ratios against `log_base` of `d′`, with
/// a dashed reference line at 1.
pub fn emit_ratio_figure(table: &[RatioRow], log_base: f64) -> Result<String> {
    if table.is_empty() {
        return Err(param("ratio table is empty"));
    }
    let series = |name: &str, color: &str, pick: fn(&RatioRow) -> f64| Series {
        name: name.into(),
        color: color.into(),
        points: table.iter().map(|r| (r.d_prime as f64, pick(r))).collect(),
    };
    render(&FigureSpec {
        kind: FigureKind::RatioCurves,
        x_label: format!("dimension after reduction (log base {log_base})"),
        y_label: "ratio to unreduced baseline".into(),
        log_base,
        series: vec![
            series("time ratio", TIME_COLOR, |r| r.time_ratio),
            series("accuracy ratio", ACCURACY_COLOR, |r| r.accuracy_ratio),
        ],
    })
}

/// One circle per point, filled by `PALETTE[label % 10]`.
pub fn emit_scatter_figure(y: &Embedding, labels: &LabelVector) -> Result<String> {
    labels.check_aligned(y.n())?;
    if y.dims() != 2 {
        return Err(param("scatter plots need a 2-D embedding"));
    }
    let mut groups: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, &label) in labels.as_slice().iter().enumerate() {
        let p = y.point(i);
        groups.entry(label).or_default().push((p[0], p[1]));
    }
    render(&FigureSpec {
        kind: FigureKind::Scatter,
        x_label: String::new(),
        y_label: String::new(),
        log_base: 1.5,
        series: groups
            .into_iter()
            .map(|(label, points)| Series {
                name: format!("label {label}"),
                color: PALETTE[(label % PALETTE.len() as u64) as usize].into(),
                points,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d_prime: usize, time_ratio: f64, accuracy_ratio: f64) -> RatioRow {
        RatioRow {
            d_prime,
            time_ratio,
            accuracy_ratio,
        }
    }

    fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .map(|n| {
                n.attribute("points")
                    .unwrap()
                    .split_whitespace()
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_row_gives_two_one_point_series() {
        let svg = emit_ratio_figure(&[row(784, 1.0, 1.0)], 1.5).unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.len() == 1));
    }

    #[test]
    fn pixel_mapping_matches_recomputation() {
        let table = [row(7, 0.2, 0.5), row(35, 0.5, 0.9), row(784, 1.0, 1.0)];
        let svg = emit_ratio_figure(&table, 1.5).unwrap();
        let lines = polylines(&svg);
        // Independent mapping: fractions of the log span, y_max = 1.2.
        let span = (784.0f64 / 7.0).ln();
        let plot_w = 640.0 - 64.0 - 24.0;
        let plot_h = 400.0 - 24.0 - 56.0;
        for (series, pick) in [(0, 1usize), (1, 2)] {
            for (i, r) in table.iter().enumerate() {
                let v = if pick == 1 { r.time_ratio } else { r.accuracy_ratio };
                let ex = 64.0 + (r.d_prime as f64 / 7.0).ln() / span * plot_w;
                let ey = 24.0 + (1.0 - v / 1.2) * plot_h;
                let (x, y) = lines[series][i];
                assert!((x - ex).abs() <= 0.5 && (y - ey).abs() <= 0.5, "{x},{y} vs {ex},{ey}");
            }
        }
        assert!(svg.contains(TIME_COLOR) && svg.contains(ACCURACY_COLOR));
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(emit_ratio_figure(&[], 1.5).is_err());
    }

    fn fills(svg: &str) -> Vec<(String, f64, f64)> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.has_tag_name("circle"))
            .map(|c| {
                let fill = c.parent().unwrap().attribute("fill").unwrap().to_string();
                (fill, c.attribute("cx").unwrap().parse().unwrap(), c.attribute("cy").unwrap().parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn two_labels_two_colours() {
        let y = Embedding::new(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let c = fills(&emit_scatter_figure(&y, &LabelVector::new(vec![3, 4])).unwrap());
        assert_eq!(c.len(), 2);
        assert_ne!(c[0].0, c[1].0);
        // 5% margin on each side.
        assert!((c[0].1 - 480.0 * 0.05 / 1.1).abs() < 0.01);
        assert!((c[1].2 - 480.0 * 0.05 / 1.1).abs() < 0.01);
    }

    #[test]
    fn identical_points_share_a_centre() {
        let y = Embedding::new(4, 2, vec![2.0; 8]).unwrap();
        let c = fills(&emit_scatter_figure(&y, &LabelVector::new(vec![0, 1, 0, 1])).unwrap());
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|p| p.1 == 240.0 && p.2 == 240.0));
    }

    #[test]
    fn mismatched_labels_rejected() {
        let y = Embedding::new(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(emit_scatter_figure(&y, &LabelVector::new(vec![1])).is_err());
    }

    #[test]
    fn text_is_escaped() {
        let svg = render(&FigureSpec {
            kind: FigureKind::RatioCurves,
            x_label: "a < b & c".into(),
            y_label: "\"y\"".into(),
            log_base: 2.0,
            series: vec![Series {
                name: "<s>".into(),
                color: "blue".into(),
                points: vec![(2.0, 0.5), (8.0, 1.5)],
            }],
        })
        .unwrap();
        roxmltree::Document::parse(&svg).unwrap();
    }
}
