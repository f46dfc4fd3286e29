//! Minimal SVG line charts: a series in blue with a shapelet overlaid in
//! red at its offset.

use std::fmt::Write;

use crate::interpret::ShapeletCandidate;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    len: usize,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, i: usize) -> f64 {
        let span = (self.len.max(2) - 1) as f64;
        MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo {
            self.hi - self.lo
        } else {
            1.0
        };
        HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - self.lo) / span
    }

    fn polyline(&self, offset: usize, values: &[f64], color: &str, width: f64) -> String {
        let mut points = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", self.x(offset + i), self.y(*v));
        }
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" points=\"{points}\"/>\n"
        )
    }
}

/// Chart of `series` with `shapelet` drawn over samples
/// `start..start + length`.
pub fn shapelet_svg(series: &[f64], shapelet: &ShapeletCandidate, title: &str) -> String {
    let all = series.iter().chain(&shapelet.values).copied();
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame {
        len: series.len(),
        lo: if lo.is_finite() { lo } else { 0.0 },
        hi: if hi.is_finite() { hi } else { 1.0 },
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        MARGIN / 2.0 + 5.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        "<path d=\"M{m},{top} V{bottom} H{right}\" stroke=\"#444\" fill=\"none\"/>",
        m = MARGIN,
        top = MARGIN,
        bottom = HEIGHT - MARGIN,
        right = WIDTH - MARGIN
    );
    for (v, anchor) in [(frame.lo, HEIGHT - MARGIN), (frame.hi, MARGIN)] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            MARGIN - 4.0,
            anchor + 3.0,
            v
        );
    }
    svg += &frame.polyline(0, series, "#1f77b4", 1.5);
    svg += &frame.polyline(shapelet.start, &shapelet.values, "#d62728", 3.0);
    svg += "</svg>\n";
    svg
}
