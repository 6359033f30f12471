//! Just enough SVG to draw scatter plots, curves and histograms. Output is
//! a pure function of the inputs: coordinates are printed with two decimals
//! and nothing time- or host-dependent is embedded.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"{dash}/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" fill-opacity="0.7"/>"#
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}"/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
            coords.join(" ")
        );
    }

    /// `anchor` is one of `start`, `middle`, `end`.
    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    pub fn rotated_text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" font-family="sans-serif" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(content)
        );
    }

    /// Free-form metadata, e.g. fit parameters.
    pub fn comment(&mut self, content: &str) {
        let _ = writeln!(self.body, "<!-- {} -->", content.replace("--", "- -"));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Maps a data window onto a pixel rectangle (y grows downwards).
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Frame {
    pub fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (v - lo) / (hi - lo) * self.width
    }

    pub fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + self.height - (v - lo) / (hi - lo) * self.height
    }

    pub fn contains_x(&self, v: f64) -> bool {
        v >= self.x_range.0 && v <= self.x_range.1
    }

    /// Border plus tick labels on both axes.
    pub fn draw_axes(&self, svg: &mut Svg, ticks: usize, x_label: &str, y_label: &str) {
        svg.rect(self.left, self.top, self.width, self.height, "none", "black");
        for i in 0..=ticks {
            let f = i as f64 / ticks as f64;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let px = self.x(xv);
            let py = self.y(yv);
            let bottom = self.top + self.height;
            svg.line(px, bottom, px, bottom + 4.0, "black", 1.0, false);
            svg.text(px, bottom + 15.0, 9.0, "middle", &tick_label(xv));
            svg.line(self.left - 4.0, py, self.left, py, "black", 1.0, false);
            svg.text(self.left - 6.0, py + 3.0, 9.0, "end", &tick_label(yv));
        }
        if !x_label.is_empty() {
            svg.text(self.left + self.width / 2.0, self.top + self.height + 30.0, 11.0, "middle", x_label);
        }
        if !y_label.is_empty() {
            svg.rotated_text(self.left - 34.0, self.top + self.height / 2.0, 11.0, y_label);
        }
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".to_string() } else { s }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners() {
        let f = Frame {
            left: 10.0,
            top: 20.0,
            width: 100.0,
            height: 50.0,
            x_range: (-1.0, 1.0),
            y_range: (0.0, 1.0),
        };
        assert_eq!(f.x(-1.0), 10.0);
        assert_eq!(f.x(1.0), 110.0);
        assert_eq!(f.y(0.0), 70.0);
        assert_eq!(f.y(1.0), 20.0);
    }

    #[test]
    fn text_is_escaped() {
        let mut svg = Svg::new(10.0, 10.0);
        svg.text(0.0, 0.0, 10.0, "start", "a<b & c");
        let out = svg.finish();
        assert!(out.contains("a&lt;b &amp; c"));
        assert!(out.starts_with("<svg"));
        assert!(out.ends_with("</svg>\n"));
    }
}
