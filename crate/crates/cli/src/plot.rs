//! Self-rendered SVG line plots: no external plotting dependency, so the
//! figures build anywhere the binary does.

use crate::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Shaded region between a lower and an upper trace sharing x values.
#[derive(Debug, Clone)]
pub struct Band {
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Labelled vertical marker, e.g. a rung-change event.
#[derive(Debug, Clone)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub markers: Vec<Marker>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }
    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot; every input point appears in the output. Fails on a
/// plot with no data points.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in &spec.series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
    }
    for b in &spec.bands {
        xs.extend_from_slice(&b.xs);
        ys.extend_from_slice(&b.lower);
        ys.extend_from_slice(&b.upper);
    }
    for m in &spec.markers {
        xs.push(m.x);
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(CliError::Usage(format!(
            "plot {:?} has no data points",
            spec.title
        )));
    }
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut y_min, mut y_max) = (min(&ys), max(&ys));
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let frame = Frame {
        x_min: min(&xs),
        x_max: max(&xs).max(min(&xs) + 1e-12),
        y_min,
        y_max,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\" \
         font-family=\"sans-serif\">{}</text>\n",
        WIDTH / 2.0,
        escape(&spec.title)
    ));

    // Axes with 5 ticks each.
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\" \
             font-family=\"sans-serif\">{:.3}</text>\n",
            frame.x(xv),
            y0 + 18.0,
            xv
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
             font-family=\"sans-serif\">{:.3}</text>\n",
            x0 - 6.0,
            frame.y(yv) + 4.0,
            yv
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         font-family=\"sans-serif\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&spec.y_label)
    ));

    for (i, band) in spec.bands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, (&x, &u)) in band.xs.iter().zip(&band.upper).enumerate() {
            d.push_str(if j == 0 { "M" } else { "L" });
            d.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(u)));
        }
        for (&x, &l) in band.xs.iter().zip(&band.lower).rev() {
            d.push_str(&format!("L{:.2},{:.2} ", frame.x(x), frame.y(l)));
        }
        d.push('Z');
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
        ));
    }

    for marker in &spec.markers {
        let px = frame.x(marker.x);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{y1}\" x2=\"{px:.2}\" y2=\"{y0}\" stroke=\"#999999\" \
             stroke-dasharray=\"4 3\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.1}\" font-size=\"10\" font-family=\"sans-serif\" \
             fill=\"#555555\">{}</text>\n",
            px + 2.0,
            y1 + 10.0,
            escape(&marker.label)
        ));
    }

    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_TOP + 14.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"3\"/>\n",
            x1 - 150.0,
            x1 - 130.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
            x1 - 124.0,
            ly + 4.0,
            escape(&series.label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
