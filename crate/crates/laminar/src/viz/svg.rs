//! Minimal SVG document builder; files are written atomically.

use std::path::Path;

use crate::error::Result;

/// Maps a (padded) data-space bounding box onto pixel coordinates with the
/// y axis flipped.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Frame {
    /// Frame around the rows of `points` with fractional padding.
    pub fn around(points: &ndarray::ArrayView2<f64>, pad: f64, width: f64) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for row in points.outer_iter() {
            x_min = x_min.min(row[0]);
            x_max = x_max.max(row[0]);
            y_min = y_min.min(row[1]);
            y_max = y_max.max(row[1]);
        }
        let dx = (x_max - x_min).max(1e-9);
        let dy = (y_max - y_min).max(1e-9);
        let (x_min, x_max) = (x_min - pad * dx, x_max + pad * dx);
        let (y_min, y_max) = (y_min - pad * dy, y_max + pad * dy);
        let aspect = (y_max - y_min) / (x_max - x_min);
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
            width,
            height: width * aspect,
            margin: 10.0,
        }
    }

    pub fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (x - self.x_min) / (self.x_max - self.x_min);
        let sy = (y - self.y_min) / (self.y_max - self.y_min);
        (
            self.margin + sx * self.width,
            self.margin + (1.0 - sy) * self.height,
        )
    }

    pub fn canvas(&self) -> (f64, f64) {
        (
            self.width + 2.0 * self.margin,
            self.height + 2.0 * self.margin,
        )
    }
}

/// Accumulates SVG elements and serializes the document.
pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Svg {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn with_frame(frame: &Frame) -> Svg {
        let (w, h) = frame.canvas();
        let mut svg = Svg::new(w, h);
        svg.rect(0.0, 0.0, w, h, "#ffffff");
        svg
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        self.body.push_str(&format!(
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        ));
        self.body.push('\n');
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        self.body.push_str(&format!(
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" stroke="#888888" stroke-width="0.2"/>"##
        ));
        self.body.push('\n');
    }

    pub fn ellipse(
        &mut self,
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        rotate_deg: f64,
        stroke: &str,
        fill: &str,
    ) {
        self.body.push_str(&format!(
            r#"<ellipse cx="0" cy="0" rx="{rx:.2}" ry="{ry:.2}" transform="translate({cx:.2} {cy:.2}) rotate({rotate_deg:.2})" fill="{fill}" stroke="{stroke}" stroke-width="0.8"/>"#
        ));
        self.body.push('\n');
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.body.push_str(&format!(
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        ));
        self.body.push('\n');
    }

    /// An ×-shaped marker.
    pub fn cross(&mut self, x: f64, y: f64, size: f64, stroke: &str) {
        self.line(x - size, y - size, x + size, y + size, stroke, 2.0);
        self.line(x - size, y + size, x + size, y - size, stroke, 2.0);
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        let escaped = content
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        self.body.push_str(&format!(
            r##"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" font-family="sans-serif" fill="#333333">{escaped}</text>"##
        ));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }

    pub fn save(self, path: &Path) -> Result<()> {
        crate::flow::write_atomic(path, self.finish().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners_with_y_flip() {
        let pts = ndarray::array![[0.0, 0.0], [10.0, 5.0]];
        let f = Frame::around(&pts.view(), 0.0, 100.0);
        let (x0, y0) = f.px(0.0, 0.0);
        let (x1, y1) = f.px(10.0, 5.0);
        assert!(x0 < x1);
        assert!(
            y0 > y1,
            "larger data y is higher on screen (smaller pixel y)"
        );
    }

    #[test]
    fn document_is_well_formed() {
        let mut svg = Svg::new(50.0, 50.0);
        svg.circle(10.0, 10.0, 2.0, "#ff0000");
        svg.text(5.0, 45.0, 8.0, "a < b & c");
        let doc = svg.finish();
        assert!(doc.starts_with("<svg"));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert!(doc.contains("&lt;"));
        assert!(!doc.contains("a < b"));
    }
}
