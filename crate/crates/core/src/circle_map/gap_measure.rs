//! Maps obtained by inserting gaps along rotation orbits.
//!
//! An atom of mass ℓ at angle θ is blown up into a gap of length ℓ. The
//! cumulative mass `G(θ) = uθ + Σ_{θ_j < θ} ℓ_j`, `u = 1 − Σ ℓ_j`, turns
//! angles into positions, and the map carries each gap onto the gap of the
//! next atom along its orbit. A gap with no successor becomes a plateau; an
//! atom with no predecessor leaves a jump. `G⁻¹` is an exact semiconjugacy
//! to the rotation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Branch, CircleMapError, Piece, PiecewiseMonotoneCircleMap, Provenance};
use crate::cfrac::AlphaHandle;
use crate::closest_returns::ArcInterval;

pub const DEFAULT_TRUNCATION: i64 = 8192;

/// Which orbit indices carry gaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRule {
    /// `|k| ≤ M`: a Denjoy-type homeomorphism up to truncation.
    TwoSided,
    /// `−M ≤ k ≤ 0`: gap 0 has no successor and becomes a plateau.
    Plateau,
    /// `0 ≤ k ≤ M`: atom 0 has no predecessor and becomes a jump.
    Jump,
}

/// Gap lengths along one orbit, normalized to the stated total mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GapWeights {
    /// ℓ_k ∝ 1/(k² + shift).
    InverseSquare { mass: f64, shift: f64 },
    /// ℓ_k ∝ ratio^|k|.
    Geometric { mass: f64, ratio: f64 },
}

impl GapWeights {
    pub fn inverse_square(mass: f64) -> Self {
        GapWeights::InverseSquare { mass, shift: 4.0 }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            GapWeights::InverseSquare { mass, .. } | GapWeights::Geometric { mass, .. } => mass,
        }
    }

    fn raw(&self, k: i64) -> f64 {
        match *self {
            GapWeights::InverseSquare { shift, .. } => 1.0 / ((k * k) as f64 + shift),
            GapWeights::Geometric { ratio, .. } => ratio.powi(k.unsigned_abs() as i32),
        }
    }
}

/// One orbit of gaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapOrbit {
    /// Angle of the atom with index 0.
    pub seed: f64,
    pub rule: GapRule,
    pub weights: GapWeights,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub orbit: usize,
    pub k: i64,
    pub theta: f64,
    pub mass: f64,
    /// Left end of the gap, `G(θ)`.
    pub x0: f64,
}

/// A side effect of truncating an orbit of gaps at finite index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub orbit: usize,
    pub k: i64,
    pub plateau: bool,
    pub size: f64,
}

#[derive(Clone, Debug)]
pub struct GapMeasure {
    pub alpha: f64,
    pub uniform: f64,
    pub orbits: Vec<GapOrbit>,
    pub truncation: i64,
    atoms: Vec<Atom>,
    prefix: Vec<f64>,
    index: HashMap<(usize, i64), usize>,
}

impl GapMeasure {
    pub fn new(alpha: f64, orbits: Vec<GapOrbit>, truncation: i64) -> Result<Self, CircleMapError> {
        let mut atoms = Vec::new();
        let mut total = 0.0;
        for (o, orb) in orbits.iter().enumerate() {
            let (lo, hi) = match orb.rule {
                GapRule::TwoSided => (-truncation, truncation),
                GapRule::Plateau => (-truncation, 0),
                GapRule::Jump => (0, truncation),
            };
            let mass = orb.weights.mass();
            if !(mass >= 0.0) {
                return Err(CircleMapError::BadGapWeights(format!("negative mass {mass}")));
            }
            if mass == 0.0 {
                continue;
            }
            let norm: f64 = (lo..=hi).map(|k| orb.weights.raw(k)).sum();
            for k in lo..=hi {
                let m = mass * orb.weights.raw(k) / norm;
                if !(m > 0.0) {
                    return Err(CircleMapError::BadGapWeights(format!("gap {k} has length {m}")));
                }
                atoms.push(Atom {
                    orbit: o,
                    k,
                    theta: super::frac(orb.seed + k as f64 * alpha),
                    mass: m,
                    x0: 0.0,
                });
            }
            total += mass;
        }
        if total >= 1.0 {
            return Err(CircleMapError::GapMassTooLarge(total));
        }
        atoms.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        for w in atoms.windows(2) {
            if w[0].theta == w[1].theta {
                return Err(CircleMapError::BadGapWeights(
                    "two gap orbits share a point; seeds must lie on distinct orbits".into(),
                ));
            }
        }
        let uniform = 1.0 - total;
        let mut prefix = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for a in atoms.iter_mut() {
            a.x0 = uniform * a.theta + acc;
            acc += a.mass;
            prefix.push(acc);
        }
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| ((a.orbit, a.k), i))
            .collect();
        let gm = GapMeasure {
            alpha,
            uniform,
            orbits,
            truncation,
            atoms,
            prefix,
            index,
        };
        for i in 0..gm.atoms.len() {
            if let Some(s) = gm.successor(i) {
                let ratio = gm.atoms[i].mass / gm.atoms[s].mass;
                if !(ratio < 3.0) {
                    return Err(CircleMapError::BadGapWeights(format!(
                        "gap ratio {ratio} between consecutive orbit gaps must stay below 3"
                    )));
                }
            }
        }
        Ok(gm)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn successor(&self, i: usize) -> Option<usize> {
        let a = &self.atoms[i];
        self.index.get(&(a.orbit, a.k + 1)).copied()
    }

    pub fn predecessor(&self, i: usize) -> Option<usize> {
        let a = &self.atoms[i];
        self.index.get(&(a.orbit, a.k - 1)).copied()
    }

    pub fn atom_index(&self, orbit: usize, k: i64) -> Option<usize> {
        self.index.get(&(orbit, k)).copied()
    }

    /// The closed gap of atom `(orbit, k)`.
    pub fn gap(&self, orbit: usize, k: i64) -> Option<ArcInterval> {
        self.atom_index(orbit, k).map(|i| {
            let a = &self.atoms[i];
            ArcInterval::closed(a.x0, a.mass)
        })
    }

    /// `G` on the lift at a non-atom angle.
    pub fn position(&self, theta: f64) -> f64 {
        let n = theta.floor();
        let f = theta - n;
        let i = self.atoms.partition_point(|a| a.theta < f);
        self.uniform * f + self.prefix[i] + n
    }

    /// The semiconjugacy `h = G⁻¹` on the lift; constant on every gap.
    pub fn angle(&self, x: f64) -> f64 {
        let n = x.floor();
        let f = x - n;
        let i = self.atoms.partition_point(|a| a.x0 <= f);
        if i > 0 {
            let a = &self.atoms[i - 1];
            if f <= a.x0 + a.mass {
                return a.theta + n;
            }
        }
        ((f - self.prefix[i]) / self.uniform).clamp(0.0, 1.0) + n
    }

    /// Truncation side effects: plateaus and jumps not asked for by the rules.
    pub fn defects(&self) -> Vec<Defect> {
        let mut out = Vec::new();
        for (o, orb) in self.orbits.iter().enumerate() {
            if orb.weights.mass() == 0.0 {
                continue;
            }
            let m = self.truncation;
            let mut push = |k: i64, plateau: bool| {
                if let Some(i) = self.atom_index(o, k) {
                    out.push(Defect {
                        orbit: o,
                        k,
                        plateau,
                        size: self.atoms[i].mass,
                    });
                }
            };
            match orb.rule {
                GapRule::TwoSided => {
                    push(m, true);
                    push(-m, false);
                }
                GapRule::Plateau => push(-m, false),
                GapRule::Jump => push(m, true),
            }
        }
        out
    }

    /// Lift values of the image of gap `i`: the successor gap, or one point.
    fn image(&self, i: usize) -> (f64, f64) {
        let a = &self.atoms[i];
        match self.successor(i) {
            Some(s) => {
                let b = &self.atoms[s];
                let wrap = if b.theta < a.theta { 1.0 } else { 0.0 };
                (b.x0 + wrap, b.x0 + b.mass + wrap)
            }
            None => {
                let v = self.position(a.theta + self.alpha);
                (v, v)
            }
        }
    }

    /// Builds the piece table of the map.
    pub fn build_table(&self) -> Result<Vec<Piece>, CircleMapError> {
        let alpha = self.alpha;
        // jump locations: preimages of atoms without predecessor
        let mut orphans: Vec<(f64, usize)> = (0..self.atoms.len())
            .filter(|&i| self.predecessor(i).is_none())
            .map(|i| (super::frac(self.atoms[i].theta - alpha), i))
            .collect();
        orphans.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut pieces = Vec::with_capacity(2 * self.atoms.len() + orphans.len() + 2);
        let n = self.atoms.len();
        let push_segment =
            |pieces: &mut Vec<Piece>, th_a: f64, th_b: f64, xa: f64, xb: f64, ya: f64, yb: f64| {
                let lo = orphans.partition_point(|o| o.0 <= th_a);
                let hi = orphans.partition_point(|o| o.0 < th_b);
                let (mut x, mut y) = (xa, ya);
                for &(th, j) in &orphans[lo..hi] {
                    let xs = self.position(th);
                    let o = &self.atoms[j];
                    let wrap = if o.theta < th { 1.0 } else { 0.0 };
                    let yl = o.x0 + wrap;
                    if xs > x {
                        pieces.push(Piece::affine(x, xs, y, yl));
                    }
                    x = xs;
                    y = yl + o.mass;
                }
                if xb > x {
                    pieces.push(Piece::affine(x, xb, y, yb));
                }
            };
        let start_y = self.position(alpha);
        if n == 0 {
            push_segment(&mut pieces, 0.0, 1.0, 0.0, 1.0, start_y, start_y + 1.0);
            return Ok(pieces);
        }
        // segment before the first atom
        let first = &self.atoms[0];
        if first.theta > 0.0 {
            let (lo, _) = self.image(0);
            push_segment(&mut pieces, 0.0, first.theta, 0.0, first.x0, start_y, lo);
        }
        for i in 0..n {
            let a = &self.atoms[i];
            let (ylo, yhi) = self.image(i);
            let x1 = a.x0 + a.mass;
            let branch = match self.successor(i) {
                Some(s) => {
                    let m = a.mass / self.atoms[s].mass;
                    Branch::Hermite { m0: m, m1: m }
                }
                None => Branch::Plateau,
            };
            pieces.push(Piece {
                x0: a.x0,
                x1,
                y0: ylo,
                y1: yhi,
                branch,
            });
            let (th_b, xb, yb) = if i + 1 < n {
                let b = &self.atoms[i + 1];
                (b.theta, b.x0, self.image(i + 1).0)
            } else {
                (1.0, 1.0, start_y + 1.0)
            };
            push_segment(&mut pieces, a.theta, th_b, x1, xb, yhi, yb);
        }
        Ok(pieces)
    }

    pub fn into_map(self, handle: Option<AlphaHandle>) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
        let pieces = self.build_table()?;
        let mut m = PiecewiseMonotoneCircleMap::new(pieces)?
            .with_provenance(Provenance::GapMeasure(std::sync::Arc::new(self)));
        if let Some(h) = handle {
            m = m.with_handle(h);
        }
        Ok(m)
    }
}
