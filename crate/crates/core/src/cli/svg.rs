//! Phase portraits: the torus as the unit square on a fixed 1024×1024 canvas.

use std::fmt::Write;

pub const SIZE: f64 = 1024.0;

pub struct Svg {
    body: String,
}

impl Default for Svg {
    fn default() -> Self {
        Self::new()
    }
}

fn px(p: [f64; 2]) -> (f64, f64) {
    (p[0] * SIZE, (1.0 - p[1]) * SIZE)
}

/// Cuts a lifted path where it crosses integer lines and moves every piece
/// into the unit square.
pub fn wrap_split(points: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let mut out: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut cell: Option<(f64, f64)> = None;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut ts = vec![0.0, 1.0];
        for k in 0..2 {
            let (lo, hi) = (a[k].min(b[k]), a[k].max(b[k]));
            let mut m = lo.floor() + 1.0;
            while m < hi {
                ts.push((m - a[k]) / (b[k] - a[k]));
                m += 1.0;
            }
        }
        ts.sort_by(f64::total_cmp);
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        for s in ts.windows(2) {
            if s[1] <= s[0] {
                continue;
            }
            let mid = at(0.5 * (s[0] + s[1]));
            let c = (mid[0].floor(), mid[1].floor());
            let (u, v) = (at(s[0]), at(s[1]));
            let local = |p: [f64; 2]| [p[0] - c.0, p[1] - c.1];
            if cell != Some(c) {
                out.push(vec![local(u)]);
                cell = Some(c);
            }
            out.last_mut().unwrap().push(local(v));
        }
    }
    if out.is_empty() {
        if let Some(p) = points.first() {
            out.push(vec![[p[0].rem_euclid(1.0), p[1].rem_euclid(1.0)]]);
        }
    }
    out
}

impl Svg {
    pub fn new() -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##
        );
        Svg { body }
    }

    /// Draws a lifted path, split at the edges of the square.
    pub fn path(&mut self, points: &[[f64; 2]], stroke: &str, width: f64) {
        for part in wrap_split(points) {
            if part.len() < 2 {
                continue;
            }
            let mut pts = String::new();
            for p in part {
                let (x, y) = px(p);
                let _ = write!(pts, "{x:.2},{y:.2} ");
            }
            let _ = writeln!(
                self.body,
                r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
                pts.trim_end()
            );
        }
    }

    pub fn dot(&mut self, p: [f64; 2], r: f64, fill: &str) {
        let (x, y) = px([p[0].rem_euclid(1.0), p[1].rem_euclid(1.0)]);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n{}</svg>\n",
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_path_is_cut_at_the_edges() {
        let parts = wrap_split(&[[0.5, 0.5], [1.5, 0.5]]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], vec![[0.5, 0.5], [1.0, 0.5]]);
        assert_eq!(parts[1], vec![[0.0, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn diagonal_through_a_corner() {
        let parts = wrap_split(&[[0.5, 0.5], [1.5, 1.5]]);
        assert_eq!(parts.len(), 2);
        for p in parts.iter().flatten() {
            assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn pieces_stay_inside_the_square() {
        let pts: Vec<[f64; 2]> = (0..200).map(|i| [i as f64 * 0.037, -(i as f64) * 0.051]).collect();
        for part in wrap_split(&pts) {
            for p in part {
                assert!((-1e-12..=1.0 + 1e-12).contains(&p[0]) && (-1e-12..=1.0 + 1e-12).contains(&p[1]));
            }
        }
    }

    #[test]
    fn document_declares_its_size() {
        let mut s = Svg::new();
        s.path(&[[0.1, 0.1], [0.9, 0.2]], "#000", 1.0);
        let doc = s.finish();
        assert!(doc.contains(r#"width="1024" height="1024""#));
        assert!(doc.ends_with("</svg>\n"));
    }
}
