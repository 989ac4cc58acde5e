//! Minimal SVG plots: axes, scattered points, polylines and the dotted unit
//! circle used in complex-plane spectra.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub struct Plot {
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
    title: String,
    x_label: String,
    y_label: String,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        Self {
            x_range: widen(x_range),
            y_range: widen(y_range),
            body: String::new(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }

    /// Square plot of the complex plane around the unit circle, with limits
    /// enlarged to hold all `points`, capped at `max_radius`.
    pub fn complex_plane(title: &str, points: &[(f64, f64)], max_radius: f64) -> Self {
        let extent = points
            .iter()
            .map(|(x, y)| x.abs().max(y.abs()))
            .filter(|r| r.is_finite())
            .fold(1.2_f64, f64::max)
            .min(max_radius);
        let mut plot = Self::new(title, "Re", "Im", (-extent, extent), (-extent, extent));
        plot.dotted_circle(1.0);
        plot
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        x.is_finite()
            && y.is_finite()
            && (self.x_range.0..=self.x_range.1).contains(&x)
            && (self.y_range.0..=self.y_range.1).contains(&y)
    }

    pub fn points(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts {
            if self.inside(x, y) {
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                    self.sx(x),
                    self.sy(y)
                );
            }
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| self.inside(*x, *y))
            .map(|&(x, y)| format!("{:.2},{:.2}", self.sx(x), self.sy(y)))
            .collect();
        if coords.len() < 2 {
            return;
        }
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>"#,
            coords.join(" ")
        );
    }

    pub fn dotted_circle(&mut self, radius: f64) {
        let (cx, cy) = (self.sx(0.0), self.sy(0.0));
        let rx = self.sx(radius) - cx;
        let ry = cy - self.sy(radius);
        let _ = writeln!(
            self.body,
            r##"<ellipse cx="{cx:.2}" cy="{cy:.2}" rx="{rx:.2}" ry="{ry:.2}" fill="none" stroke="#888" stroke-dasharray="2 3"/>"##
        );
    }

    pub fn horizontal_line(&mut self, y: f64, color: &str) {
        let (x0, x1) = self.x_range;
        self.polyline(&[(x0, y), (x1, y)], color, true);
    }

    fn axes(&self) -> String {
        let mut s = String::new();
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let _ = writeln!(
            s,
            r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
            m = MARGIN,
            w = WIDTH - 2.0 * MARGIN,
            h = HEIGHT - 2.0 * MARGIN
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{:.3}</text>"#,
                self.sx(fx),
                HEIGHT - MARGIN + 16.0,
                fx
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.3}</text>"#,
                MARGIN - 6.0,
                self.sy(fy) + 4.0,
                fy
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="28" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        s
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}{}</svg>\n",
            self.axes(),
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
