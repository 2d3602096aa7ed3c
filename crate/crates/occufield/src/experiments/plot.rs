//! Minimal standalone SVG plots: one polyline per series, optional fitted
//! line, axes with tick labels. Log-log plots map through natural logs so a
//! fit from the rate regression can be drawn directly.

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

fn fmt(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

/// Render a series as a standalone SVG document.
///
/// With `log_log` set, both coordinates must be strictly positive. `fit`
/// draws the line `ln y = intercept + slope ln x` (or `y = intercept +
/// slope x` on linear axes) on top of the data.
pub fn emit_plot(series: &[(f64, f64)], log_log: bool, fit: Option<(f64, f64)>) -> Result<String> {
    if series.len() < 2 {
        return Err(Error::NotEnoughPoints {
            need: 2,
            got: series.len(),
        });
    }
    if series.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidSamples);
    }
    if log_log && series.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::NonPositiveLogValue);
    }
    let transform = |(x, y): (f64, f64)| if log_log { (x.ln(), y.ln()) } else { (x, y) };
    let pts: Vec<(f64, f64)> = series.iter().copied().map(transform).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !(x_max > x_min) || !(y_max > y_min) {
        return Err(Error::DegeneratePlotRange);
    }
    let sx = (WIDTH - 2.0 * MARGIN) / (x_max - x_min);
    let sy = (HEIGHT - 2.0 * MARGIN) / (y_max - y_min);
    let px = |x: f64| MARGIN + (x - x_min) * sx;
    let py = |y: f64| HEIGHT - MARGIN - (y - y_min) * sy;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN
    ));
    // ticks with labels in original units
    let ticks = 5;
    for i in 0..=ticks {
        let f = i as f64 / ticks as f64;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let (xl, yl) = if log_log {
            (xv.exp(), yv.exp())
        } else {
            (xv, yv)
        };
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/>\n",
            x = px(xv),
            b = HEIGHT - MARGIN,
            b2 = HEIGHT - MARGIN + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" text-anchor=\"middle\">{t}</text>\n",
            x = px(xv),
            y = HEIGHT - MARGIN + 18.0,
            t = fmt(xl)
        ));
        svg.push_str(&format!(
            "<line x1=\"{m2}\" y1=\"{y}\" x2=\"{m}\" y2=\"{y}\" stroke=\"black\"/>\n",
            m2 = MARGIN - 5.0,
            m = MARGIN,
            y = py(yv)
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" text-anchor=\"end\">{t}</text>\n",
            x = MARGIN - 8.0,
            y = py(yv) + 4.0,
            t = fmt(yl)
        ));
    }
    // the data
    let mut points = String::new();
    for &(x, y) in &pts {
        points.push_str(&format!("{:.2},{:.2} ", px(x), py(y)));
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.trim_end()
    ));
    for &(x, y) in &pts {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            px(x),
            py(y)
        ));
    }
    // fitted line across the x-range
    if let Some((slope, intercept)) = fit {
        let y0 = intercept + slope * x_min;
        let y1 = intercept + slope * x_max;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#d62728\" stroke-dasharray=\"6 3\"/>\n",
            px(x_min),
            py(y0),
            px(x_max),
            py(y1)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
