//! Minimal hand-written SVG: framed panels with linear or log10 axes,
//! circles, lines and text.

use std::fmt::Write;

pub struct Document {
    width: f64,
    height: f64,
    body: String,
}

impl Document {
    pub fn new(width: f64, height: f64) -> Self {
        Document { width, height, body: String::new() }
    }

    pub fn push(&mut self, element: &str) {
        self.body.push_str(element);
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

#[derive(Clone, Copy)]
pub enum Scale {
    Linear,
    Log10,
}

/// Data range of one axis, stored in axis units (`log10` for log axes).
#[derive(Clone, Copy)]
pub struct Axis {
    pub scale: Scale,
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Axis { scale: Scale::Linear, lo, hi }
    }

    /// Log axis covering whole decades around `[lo, hi]` (data units).
    pub fn log(lo: f64, hi: f64) -> Self {
        let (a, b) = (lo.log10().floor(), hi.log10().ceil());
        Axis { scale: Scale::Log10, lo: a, hi: if b > a { b } else { a + 1.0 } }
    }

    fn unit(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log10 => {
                let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
                let mut t = self.lo;
                let mut out = Vec::new();
                while t <= self.hi + 1e-9 {
                    out.push((t, format!("1e{}", t as i64)));
                    t += step;
                }
                out
            }
            Scale::Linear => {
                let span = self.hi - self.lo;
                let raw = span / 6.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
                let mut t = (self.lo / step).ceil() * step;
                let mut out = Vec::new();
                while t <= self.hi + 1e-9 * span {
                    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
                    out.push((t, format!("{t:.decimals$}")));
                    t += step;
                }
                out
            }
        }
    }
}

/// A rectangular plotting area placed on a document.
pub struct Panel {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x: Axis,
    pub y: Axis,
}

impl Panel {
    /// Pixel position of a data point, or `None` when it cannot be drawn on
    /// a log axis.
    pub fn map(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        if matches!(self.x.scale, Scale::Log10) && x <= 0.0 || matches!(self.y.scale, Scale::Log10) && y <= 0.0 {
            return None;
        }
        let (ux, uy) = (self.x.unit(x), self.y.unit(y));
        Some(self.map_units(ux, uy))
    }

    fn map_units(&self, ux: f64, uy: f64) -> (f64, f64) {
        let px = self.left + (ux - self.x.lo) / (self.x.hi - self.x.lo) * self.width;
        let py = self.top + self.height - (uy - self.y.lo) / (self.y.hi - self.y.lo) * self.height;
        (px, py)
    }

    pub fn frame(&self, doc: &mut Document, xlabel: &str, ylabel: &str) {
        doc.push(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            self.left, self.top, self.width, self.height
        ));
        let bottom = self.top + self.height;
        for (t, label) in self.x.ticks() {
            let (px, _) = self.map_units(t, self.y.lo);
            doc.push(&format!(
                "<line x1=\"{px:.2}\" y1=\"{bottom:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/><text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>",
                bottom + 4.0,
                bottom + 16.0
            ));
        }
        for (t, label) in self.y.ticks() {
            let (_, py) = self.map_units(self.x.lo, t);
            doc.push(&format!(
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"black\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
                self.left - 4.0,
                self.left,
                self.left - 6.0,
                py + 4.0
            ));
        }
        doc.push(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            self.left + self.width / 2.0,
            bottom + 32.0,
            escape(xlabel)
        ));
        let (cx, cy) = (self.left - 42.0, self.top + self.height / 2.0);
        doc.push(&format!(
            "<text x=\"{cx:.2}\" y=\"{cy:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 {cx:.2} {cy:.2})\">{}</text>",
            escape(ylabel)
        ));
    }

    pub fn circles(&self, doc: &mut Document, points: &[(f64, f64)], r: f64, fill: &str) {
        for &(x, y) in points {
            if let Some((px, py)) = self.map(x, y) {
                doc.push(&format!("<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"{r}\" fill=\"{fill}\" fill-opacity=\"0.7\"/>"));
            }
        }
    }

    /// Straight segment between two data points, clipped to nothing.
    pub fn segment(&self, doc: &mut Document, a: (f64, f64), b: (f64, f64), stroke: &str) {
        if let (Some((x1, y1)), Some((x2, y2))) = (self.map(a.0, a.1), self.map(b.0, b.1)) {
            doc.push(&format!(
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>"
            ));
        }
    }

    pub fn polyline(&self, doc: &mut Document, points: &[(f64, f64)], stroke: &str) {
        let mut d = String::new();
        for &(x, y) in points {
            if let Some((px, py)) = self.map(x, y) {
                let _ = write!(d, "{px:.2},{py:.2} ");
            }
        }
        doc.push(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            d.trim_end()
        ));
    }
}

pub fn text(doc: &mut Document, x: f64, y: f64, s: &str) {
    doc.push(&format!("<text x=\"{x:.2}\" y=\"{y:.2}\">{}</text>", escape(s)));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Distinct colour for the `i`-th of `n` series.
pub fn palette(i: usize, n: usize) -> String {
    let hue = if n <= 1 { 220.0 } else { 240.0 - 240.0 * i as f64 / (n - 1) as f64 };
    format!("hsl({hue:.0},70%,45%)")
}
