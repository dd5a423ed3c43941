//! Closed loops of homology class (0, 1): graphs `x = x0 + g(y)` over the
//! vertical circle, with `g` a sum of compactly supported bumps.

use serde::{Deserialize, Serialize};

use super::field::{bump, TorusVectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deflection {
    /// Centre on the `y` circle.
    pub y: f64,
    pub half_width: f64,
    /// Horizontal displacement at the centre.
    pub amount: f64,
}

impl Deflection {
    fn t(&self, y: f64) -> f64 {
        let d = y - self.y;
        (d - d.round()) / self.half_width
    }

    fn value(&self, y: f64) -> f64 {
        self.amount * bump(self.t(y))
    }

    fn slope(&self, y: f64) -> f64 {
        let t = self.t(y);
        if t.abs() >= 1.0 {
            return 0.0;
        }
        self.amount * 5.0 * (1.0 - t * t).powi(4) * (-2.0 * t) / self.half_width
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseLoop {
    pub x0: f64,
    #[serde(default)]
    pub deflections: Vec<Deflection>,
}

impl TransverseLoop {
    pub fn vertical(x0: f64) -> Self {
        TransverseLoop {
            x0,
            deflections: Vec::new(),
        }
    }

    pub fn homology(&self) -> [i64; 2] {
        [0, 1]
    }

    pub fn g(&self, y: f64) -> f64 {
        self.deflections.iter().map(|d| d.value(y)).sum()
    }

    pub fn g_slope(&self, y: f64) -> f64 {
        self.deflections.iter().map(|d| d.slope(y)).sum()
    }

    pub fn max_deflection(&self) -> f64 {
        self.deflections.iter().map(|d| d.amount.abs()).sum()
    }

    /// Point of the loop at parameter `y ∈ [0, 1)`.
    pub fn point(&self, y: f64) -> [f64; 2] {
        [(self.x0 + self.g(y)).rem_euclid(1.0), y.rem_euclid(1.0)]
    }

    /// Lifted section function; crossings sit at its integer levels.
    pub fn section(&self, x: f64, y: f64) -> f64 {
        x - self.x0 - self.g(y)
    }

    /// Parameter of a point on the loop.
    pub fn param(&self, _x: f64, y: f64) -> f64 {
        y.rem_euclid(1.0)
    }

    pub fn is_straight(&self) -> bool {
        self.deflections.is_empty()
    }

    /// `min (X × γ') / |γ'|` over `samples` points; positive means the field
    /// crosses the loop left to right everywhere.
    pub fn transversality_margin(&self, field: &TorusVectorField, samples: usize) -> f64 {
        (0..samples)
            .map(|i| {
                let y = i as f64 / samples as f64;
                let p = self.point(y);
                let v = field.velocity(p[0], p[1]);
                let gp = self.g_slope(y);
                (v[0] - gp * v[1]) / gp.hypot(1.0)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// No singularity on the loop (within `eps`).
    pub fn avoids_singularities(&self, field: &TorusVectorField, eps: f64) -> bool {
        field.singularities.iter().all(|s| {
            let x = self.point(s.position[1])[0];
            let d = x - s.position[0];
            (d - d.round()).abs() > eps
        })
    }
}
