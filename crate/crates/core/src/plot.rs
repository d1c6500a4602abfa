//! Self-contained SVG plot emission: scatter with identity diagonal,
//! histogram, step curve, and ROC curve. No external plotting toolchain.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Canvas {
    svg: String,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Canvas {
    fn new(title: &str, x_label: &str, y_label: &str, bounds: (f64, f64, f64, f64)) -> Self {
        let (x_min, x_max, y_min, y_max) = pad_bounds(bounds);
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = write!(
            svg,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="24" text-anchor="middle" font-size="16" font-family="sans-serif">{title}</text>"#,
            WIDTH / 2.0
        );
        let mut canvas = Canvas {
            svg,
            x_min,
            x_max,
            y_min,
            y_max,
        };
        canvas.axes(x_label, y_label);
        canvas
    }

    fn tx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn ty(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let x0 = MARGIN;
        let x1 = WIDTH - MARGIN;
        let y0 = HEIGHT - MARGIN;
        let y1 = MARGIN;
        let _ = write!(
            self.svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
        );
        let _ = write!(
            self.svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" font-family="sans-serif">{x_label}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 16.0
        );
        let _ = write!(
            self.svg,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 {})">{y_label}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );
        // Corner tick labels keep the plot readable without a full grid.
        for (value, x, y, anchor) in [
            (self.x_min, x0, y0 + 16.0, "middle"),
            (self.x_max, x1, y0 + 16.0, "middle"),
            (self.y_min, x0 - 8.0, y0, "end"),
            (self.y_max, x0 - 8.0, y1 + 4.0, "end"),
        ] {
            let _ = write!(
                self.svg,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10" font-family="sans-serif">{value:.3}</text>"#
            );
        }
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let (cx, cy) = (self.tx(x), self.ty(y));
        let _ = write!(
            self.svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r}" fill="{color}" fill-opacity="0.6"/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.tx(x), self.ty(y)))
            .collect();
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = write!(
            self.svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn bar(&mut self, x0: f64, x1: f64, height: f64, color: &str) {
        let left = self.tx(x0);
        let right = self.tx(x1);
        let top = self.ty(height);
        let bottom = self.ty(self.y_min.max(0.0));
        let _ = write!(
            self.svg,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.7" stroke="black" stroke-width="0.5"/>"#,
            right - left,
            (bottom - top).max(0.0)
        );
    }

    fn annotate(&mut self, text: &str) {
        let _ = write!(
            self.svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="13" font-family="sans-serif">{text}</text>"#,
            WIDTH - MARGIN - 8.0,
            MARGIN + 18.0
        );
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        self.svg.push_str("</svg>\n");
        std::fs::write(path, self.svg)?;
        Ok(())
    }
}

fn pad_bounds((x_min, x_max, y_min, y_max): (f64, f64, f64, f64)) -> (f64, f64, f64, f64) {
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).abs().max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x_min, x_max);
    let (y0, y1) = pad(y_min, y_max);
    (x0, x1, y0, y1)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Scatter of (estimated, ground-truth) returns with the identity diagonal
/// as a dashed reference.
pub fn scatter_with_diagonal(
    pairs: &[(f64, f64)],
    title: &str,
    path: &Path,
) -> Result<()> {
    let (x_lo, x_hi) = min_max(pairs.iter().map(|p| p.0));
    let (y_lo, y_hi) = min_max(pairs.iter().map(|p| p.1));
    let lo = x_lo.min(y_lo);
    let hi = x_hi.max(y_hi);
    let mut canvas = Canvas::new(title, "estimated task return", "ground-truth return", (lo, hi, lo, hi));
    canvas.polyline(&[(lo, lo), (hi, hi)], "gray", true);
    for &(x, y) in pairs {
        canvas.circle(x, y, 2.5, "steelblue");
    }
    canvas.finish(path)
}

/// Histogram with a fixed bin count.
pub fn histogram(values: &[f64], bins: usize, title: &str, x_label: &str, path: &Path) -> Result<()> {
    let (lo, hi) = min_max(values.iter().copied());
    let span = (hi - lo).max(1e-9);
    let mut counts = vec![0usize; bins.max(1)];
    for &v in values {
        let ix = (((v - lo) / span) * bins as f64) as usize;
        counts[ix.min(bins - 1)] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(1) as f64;
    let mut canvas = Canvas::new(title, x_label, "count", (lo, hi, 0.0, max_count));
    for (i, &c) in counts.iter().enumerate() {
        let x0 = lo + span * i as f64 / bins as f64;
        let x1 = lo + span * (i + 1) as f64 / bins as f64;
        canvas.bar(x0, x1, c as f64, "steelblue");
    }
    canvas.finish(path)
}

/// Step curve, e.g. strategy count versus demonstrations processed.
pub fn step_curve(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str, path: &Path) -> Result<()> {
    let (x_lo, x_hi) = min_max(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = min_max(points.iter().map(|p| p.1));
    let mut canvas = Canvas::new(title, x_label, y_label, (x_lo, x_hi, y_lo.min(0.0), y_hi));
    let mut steps = Vec::with_capacity(points.len() * 2);
    for (i, &(x, y)) in points.iter().enumerate() {
        if i > 0 {
            steps.push((x, points[i - 1].1));
        }
        steps.push((x, y));
    }
    canvas.polyline(&steps, "darkorange", false);
    for &(x, y) in points {
        canvas.circle(x, y, 2.0, "darkorange");
    }
    canvas.finish(path)
}

/// ROC curve with the chance diagonal and an AUC annotation.
pub fn roc_curve(points: &[(f64, f64)], auc: f64, title: &str, path: &Path) -> Result<()> {
    let mut canvas = Canvas::new(
        title,
        "false positive rate",
        "true positive rate",
        (0.0, 1.0, 0.0, 1.0),
    );
    canvas.polyline(&[(0.0, 0.0), (1.0, 1.0)], "gray", true);
    canvas.polyline(points, "crimson", false);
    for &(x, y) in points {
        canvas.circle(x, y, 2.0, "crimson");
    }
    canvas.annotate(&format!("AUC = {auc:.3}"));
    canvas.finish(path)
}
