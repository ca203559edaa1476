//! Self-contained SVG emission for validity curves: one polyline per
//! series with an optional shaded band of one standard error around the
//! mean. Coordinates are formatted with fixed precision, so output is
//! byte-deterministic for identical inputs.

use std::fmt::Write as _;

use crate::assessment::AggregatedCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One plotted series: a label, grid values, means, and the stderr band
/// (zeros for a bare curve).
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Series {
    pub fn from_aggregated(label: impl Into<String>, curve: &AggregatedCurve) -> Series {
        Series {
            label: label.into(),
            grid: curve.grid().to_vec(),
            mean: curve.mean().to_vec(),
            stderr: curve.stderr().to_vec(),
        }
    }

    pub fn from_values(label: impl Into<String>, grid: &[f64], values: &[f64]) -> Series {
        Series {
            label: label.into(),
            grid: grid.to_vec(),
            mean: values.to_vec(),
            stderr: vec![0.0; values.len()],
        }
    }
}

fn x_of(eps: f64) -> f64 {
    MARGIN + eps.clamp(0.0, 1.0) * (WIDTH - 2.0 * MARGIN)
}

fn y_of(v: f64) -> f64 {
    HEIGHT - MARGIN - v.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN)
}

fn path_points(grid: &[f64], values: &[f64]) -> String {
    let mut out = String::new();
    for (e, v) in grid.iter().zip(values) {
        let _ = write!(out, "{:.2},{:.2} ", x_of(*e), y_of(*v));
    }
    out.trim_end().to_string()
}

/// Renders the series into one SVG document with axes, ticks, shaded
/// stderr bands, and a legend.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{m:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\
         <line x1=\"{m:.2}\" y1=\"{t:.2}\" x2=\"{m:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{:.1}</text>",
            x_of(f),
            HEIGHT - MARGIN + 18.0,
            f
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{:.1}</text>",
            MARGIN - 6.0,
            y_of(f) + 4.0,
            f
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            MARGIN,
            y_of(f),
            WIDTH - MARGIN,
            y_of(f)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {mid:.2})\">{}</text>",
        HEIGHT / 2.0,
        escape(y_label),
        mid = HEIGHT / 2.0,
    );

    // Bands first so lines draw on top.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.stderr.iter().any(|&e| e > 0.0) {
            let mut band = String::new();
            for ((e, v), se) in s.grid.iter().zip(&s.mean).zip(&s.stderr) {
                let _ = write!(band, "{:.2},{:.2} ", x_of(*e), y_of(v + se));
            }
            for ((e, v), se) in s.grid.iter().zip(&s.mean).zip(&s.stderr).rev() {
                let _ = write!(band, "{:.2},{:.2} ", x_of(*e), y_of(v - se));
            }
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                band.trim_end()
            );
        }
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>",
            path_points(&s.grid, &s.mean)
        );
        let ly = MARGIN + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x0:.2}\" y1=\"{ly:.2}\" x2=\"{x1:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{tx:.2}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            escape(&s.label),
            x0 = WIDTH - MARGIN - 150.0,
            x1 = WIDTH - MARGIN - 126.0,
            tx = WIDTH - MARGIN - 120.0,
            ty = ly + 4.0,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
