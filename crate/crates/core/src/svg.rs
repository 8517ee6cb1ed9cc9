//! Minimal SVG line plots.

use std::fmt::Write;

use crate::bands::{Band, CurvePoint};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Plot {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub x_label: String,
    pub y_label: String,
    body: String,
}

impl Plot {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), x_label: &str, y_label: &str) -> Self {
        Plot {
            x_range,
            y_range,
            x_label: x_label.into(),
            y_label: y_label.into(),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (H - 2.0 * MARGIN)
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    /// Shaded horizontal strip `y ∈ [lo, hi]` at the right edge.
    pub fn strip(&mut self, lo: f64, hi: f64, color: &str) {
        let (top, bottom) = (
            self.py(hi.min(self.y_range.1)),
            self.py(lo.max(self.y_range.0)),
        );
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{top:.2}" width="8" height="{:.2}" fill="{color}" opacity="0.5"/>"#,
            W - MARGIN + 4.0,
            (bottom - top).max(0.5)
        );
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let (x0, x1) = (MARGIN, W - MARGIN);
        let (y0, y1) = (H - MARGIN, MARGIN);
        let _ = writeln!(
            s,
            r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = self.x_range.0 + t * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + t * (self.y_range.1 - self.y_range.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                s,
                r#"<line x1="{xp:.2}" y1="{y0}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 4.0,
                y0 + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{yp:.2}" x2="{x0}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                yp + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            H - 12.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            self.y_label
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

/// Band diagram: the curves `λ(k)` per sector and branch, with the band
/// intervals marked on the right.
pub fn band_diagram_svg(curves: &[CurvePoint], bands: &[Band], window: (f64, f64)) -> String {
    let pi = std::f64::consts::PI;
    let mut plot = Plot::new((-pi, pi), window, "k", "λ");
    let mut i = 0;
    while i < curves.len() {
        let key = (curves[i].ell, curves[i].branch);
        let mut run = vec![(curves[i].k, curves[i].lambda)];
        let mut j = i + 1;
        while j < curves.len() && (curves[j].ell, curves[j].branch) == key {
            run.push((curves[j].k, curves[j].lambda));
            j += 1;
        }
        // Split at gaps in k, where the curve leaves the window.
        let step = run
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(f64::INFINITY, f64::min);
        let color = COLORS[key.0 % COLORS.len()];
        let mut start = 0;
        for t in 1..=run.len() {
            if t == run.len() || run[t].0 - run[t - 1].0 > 1.5 * step {
                plot.polyline(&run[start..t], color);
                start = t;
            }
        }
        i = j;
    }
    for b in bands {
        plot.strip(b.lambda_lo, b.lambda_hi, COLORS[b.ell % COLORS.len()]);
    }
    plot.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_closed_document() {
        let mut p = Plot::new((0.0, 1.0), (0.0, 2.0), "x", "y");
        p.polyline(&[(0.0, 0.0), (1.0, 2.0)], "red");
        let s = p.render();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains(r#"points="56.00,424.00 584.00,56.00""#));
    }
}
