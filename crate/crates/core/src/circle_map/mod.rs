//! Order-preserving degree-one circle maps with plateaus and jumps.
//!
//! Maps are handled through their lifts `F: R → R`, non-decreasing with
//! `F(x + 1) = F(x) + 1`. At a jump, `lift` returns the right limit and
//! `lift_left` the left limit.

mod branch;
pub mod builders;
pub mod gap_measure;
pub mod variation;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::AlphaHandle;
use crate::closest_returns::ArcInterval;

pub use branch::Branch;
pub use builders::*;
pub use gap_measure::{GapMeasure, GapRule, GapWeights};
pub use variation::{variation_log_derivative, VariationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleMapError {
    #[error("x = {x} is a jump point (left limit {left}, right limit {right}); choose a side")]
    AtJump { x: f64, left: f64, right: f64 },
    #[error("invalid piece table: {0}")]
    InvalidTable(String),
    #[error("gap mass {0} must be < 1")]
    GapMassTooLarge(f64),
    #[error("gap weights invalid: {0}")]
    BadGapWeights(String),
    #[error("plateau arcs overlap or cover too much: {0}")]
    BadPlateaus(String),
    #[error("family is not monotone in the parameter: {0}")]
    NonMonotoneFamily(String),
    #[error("lift is not degree one / non-decreasing: {0}")]
    InvariantViolated(String),
    #[error("rotation handle `{0}` is not of bounded type")]
    NotBoundedType(String),
    #[error("derivative unavailable for this map")]
    NoDerivative,
    #[error("{0}")]
    Other(String),
}

/// Which one-sided limit to take when an orbit lands on a jump.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    #[default]
    Right,
}

/// A discontinuity of the lift, in lift coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

impl Jump {
    /// The arc skipped by the map (it has empty preimage).
    pub fn gap_arc(&self) -> ArcInterval {
        ArcInterval::open(self.left, self.right - self.left)
    }
}

pub trait CircleMap: Send + Sync {
    /// Right-continuous lift.
    fn lift(&self, x: f64) -> f64;

    fn lift_left(&self, x: f64) -> f64 {
        self.lift(x)
    }

    /// Right derivative; 0 on plateaus.
    fn derivative(&self, x: f64) -> f64;

    fn plateaus(&self) -> Vec<ArcInterval> {
        Vec::new()
    }

    fn jumps(&self) -> Vec<Jump> {
        Vec::new()
    }

    /// Points in `[0,1)` where the map fails to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Rotation number known from the construction, if any.
    fn rotation_handle(&self) -> Option<AlphaHandle> {
        None
    }

    /// `(inf{x : F(x) ≥ y}, sup{x : F(x) ≤ y})` in lift coordinates.
    ///
    /// Equal ends mean a single preimage point; for `y` inside a jump gap both
    /// ends sit at the jump.
    fn preimage(&self, y: f64) -> (f64, f64) {
        bisect_preimage(self, y)
    }

    fn eval(&self, x: f64) -> f64 {
        frac(self.lift(x))
    }

    fn as_table(&self) -> Option<&PiecewiseMonotoneCircleMap> {
        None
    }

    /// Lift with an explicit side; errors at a jump when no side is given.
    fn lift_sided(&self, x: f64, side: Option<Side>) -> Result<f64, CircleMapError> {
        let r = self.lift(x);
        let l = self.lift_left(x);
        if l == r {
            return Ok(r);
        }
        match side {
            Some(Side::Left) => Ok(l),
            Some(Side::Right) => Ok(r),
            None => Err(CircleMapError::AtJump { x, left: l, right: r }),
        }
    }
}

pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn bisect_preimage<M: CircleMap + ?Sized>(map: &M, y: f64) -> (f64, f64) {
    let c = map.lift(0.0);
    let lo_search = |pred: &dyn Fn(f64) -> bool| {
        // smallest x with pred(x), pred monotone false→true
        let (mut a, mut b) = (y - c - 2.0, y - c + 2.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if pred(m) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    };
    let lo = lo_search(&|x| map.lift(x) >= y);
    let hi = lo_search(&|x| map.lift(x) > y);
    (lo, hi.max(lo))
}

/// One piece `[x0, x1)` of a table, carrying lift values `y0 ≤ y1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub branch: Branch,
}

impl Piece {
    pub fn affine(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let branch = if y0 == y1 { Branch::Plateau } else { Branch::Affine };
        Piece { x0, x1, y0, y1, branch }
    }

    fn t(&self, x: f64) -> f64 {
        ((x - self.x0) / (self.x1 - self.x0)).clamp(0.0, 1.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x == self.x0 || self.branch.is_plateau() {
            return self.y0;
        }
        self.y0 + (self.y1 - self.y0) * self.branch.value(self.t(x))
    }

    pub fn slope(&self, x: f64) -> f64 {
        if self.branch.is_plateau() {
            return 0.0;
        }
        (self.y1 - self.y0) / (self.x1 - self.x0) * self.branch.slope(self.t(x))
    }

    /// `x` in the piece with value `y`, for `y0 ≤ y ≤ y1`.
    pub fn solve(&self, y: f64) -> f64 {
        if self.branch.is_plateau() || y <= self.y0 {
            return self.x0;
        }
        if y >= self.y1 {
            return self.x1;
        }
        let s = (y - self.y0) / (self.y1 - self.y0);
        self.x0 + (self.x1 - self.x0) * self.branch.solve(s)
    }
}

/// How a table was produced.
#[derive(Clone, Debug, Default)]
pub enum Provenance {
    #[default]
    Table,
    Rotation,
    GapMeasure(Arc<GapMeasure>),
    FlatSpot { width: f64, b: f64, omega: f64 },
    Inverse(Box<Provenance>),
    Sampled { samples: usize },
}

/// Degree-one non-decreasing map given by a table of monotone pieces that
/// covers one fundamental domain `[base, base + 1)`.
#[derive(Clone, Debug)]
pub struct PiecewiseMonotoneCircleMap {
    base: f64,
    pieces: Vec<Piece>,
    handle: Option<AlphaHandle>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    base: f64,
    pieces: Vec<Piece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<AlphaHandle>,
}

impl Serialize for PiecewiseMonotoneCircleMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TableRepr {
            base: self.base,
            pieces: self.pieces.clone(),
            rotation: self.handle.clone(),
        }
        .serialize(s)
    }
}

// compares what is stored; provenance is not
impl PartialEq for PiecewiseMonotoneCircleMap {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.pieces == other.pieces && self.handle == other.handle
    }
}

impl<'de> Deserialize<'de> for PiecewiseMonotoneCircleMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TableRepr::deserialize(d)?;
        let mut m = Self::new(r.pieces).map_err(serde::de::Error::custom)?;
        m.handle = r.rotation;
        Ok(m)
    }
}

impl PiecewiseMonotoneCircleMap {
    /// Validates contiguity, monotonicity and degree one.
    pub fn new(pieces: Vec<Piece>) -> Result<Self, CircleMapError> {
        let bad = |m: String| Err(CircleMapError::InvalidTable(m));
        if pieces.is_empty() {
            return bad("no pieces".into());
        }
        let base = pieces[0].x0;
        let last = pieces[pieces.len() - 1];
        if (last.x1 - base - 1.0).abs() > 1e-12 {
            return bad(format!("pieces span [{base}, {}) instead of one turn", last.x1));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.x1 > p.x0) || !p.y0.is_finite() || !p.y1.is_finite() {
                return bad(format!("piece {i} is empty or non-finite"));
            }
            if p.branch.is_plateau() {
                if p.y0 != p.y1 {
                    return bad(format!("plateau piece {i} has distinct end values"));
                }
            } else if !(p.y1 > p.y0) {
                return bad(format!("piece {i} is not increasing"));
            }
            p.branch.validate().map_err(CircleMapError::InvalidTable)?;
            if let Some(q) = pieces.get(i + 1) {
                if q.x0 != p.x1 {
                    return bad(format!("pieces {i} and {} are not contiguous", i + 1));
                }
                if q.y0 < p.y1 {
                    return bad(format!("lift decreases between pieces {i} and {}", i + 1));
                }
            }
        }
        if last.y1 > pieces[0].y0 + 1.0 + 1e-12 {
            return bad("lift fails F(x+1) ≥ F(x) + 1 across the seam".into());
        }
        Ok(PiecewiseMonotoneCircleMap {
            base,
            pieces,
            handle: None,
            provenance: Provenance::Table,
        })
    }

    pub fn with_handle(mut self, handle: AlphaHandle) -> Self {
        self.handle = Some(handle);
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn gap_measure(&self) -> Option<&GapMeasure> {
        match &self.provenance {
            Provenance::GapMeasure(g) => Some(g),
            _ => None,
        }
    }

    /// Reduce `x` to `r ∈ [base, base + 1)` with `x = r + k`.
    fn reduce(&self, x: f64) -> (f64, f64) {
        let k = (x - self.base).floor();
        let mut r = x - k;
        let mut k = k;
        if r >= self.base + 1.0 {
            r -= 1.0;
            k += 1.0;
        } else if r < self.base {
            r += 1.0;
            k -= 1.0;
            if r >= self.base + 1.0 {
                // x sits within rounding of a seam point
                r = self.base;
                k += 1.0;
            }
        }
        (r, k)
    }

    fn locate(&self, r: f64) -> usize {
        self.pieces.partition_point(|p| p.x0 <= r).saturating_sub(1)
    }

    /// Index of the piece containing `x` and the integer shift.
    pub fn piece_at(&self, x: f64) -> (usize, f64) {
        let (r, k) = self.reduce(x);
        (self.locate(r), k)
    }

    /// `R_c ∘ f ∘ R_{−c}`.
    pub fn conjugate_by_rotation(&self, c: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                x0: p.x0 + c,
                x1: p.x1 + c,
                y0: p.y0 + c,
                y1: p.y1 + c,
                branch: p.branch,
            })
            .collect();
        PiecewiseMonotoneCircleMap {
            base: self.base + c,
            pieces,
            handle: self.handle.clone(),
            provenance: Provenance::Table,
        }
    }

    /// Inverse map of a table, exchanging plateaus and jump gaps.
    pub fn inverse(&self) -> Result<Self, CircleMapError> {
        let n = self.pieces.len();
        let mut out: Vec<Piece> = Vec::with_capacity(n + 4);
        for i in 0..n {
            let p = self.pieces[i];
            if let Some(br) = p.branch.inverse() {
                out.push(Piece {
                    x0: p.y0,
                    x1: p.y1,
                    y0: p.x0,
                    y1: p.x1,
                    branch: br,
                });
            }
            let (next_y0, next_x0) = if i + 1 < n {
                (self.pieces[i + 1].y0, self.pieces[i + 1].x0)
            } else {
                (self.pieces[0].y0 + 1.0, self.pieces[0].x0 + 1.0)
            };
            if next_y0 > p.y1 {
                out.push(Piece {
                    x0: p.y1,
                    x1: next_y0,
                    y0: next_x0,
                    y1: next_x0,
                    branch: Branch::Plateau,
                });
            }
        }
        // plateau pieces leave zero-width duplicates when consecutive; merge
        out.retain(|p| p.x1 > p.x0);
        let m = Self::new(out)?;
        let handle = self.handle.as_ref().and_then(negate_handle);
        Ok(PiecewiseMonotoneCircleMap {
            handle,
            provenance: Provenance::Inverse(Box::new(self.provenance.clone())),
            ..m
        })
    }
}

/// Handle for `1 − ρ`, the rotation number of the inverse map mod 1.
fn negate_handle(h: &AlphaHandle) -> Option<AlphaHandle> {
    use crate::cfrac::QuadraticIrrational;
    use crate::exact::{QuadNumber, Scalar};
    match h {
        AlphaHandle::Rational { p, q } => Some(AlphaHandle::Rational { p: q - p, q: *q }),
        AlphaHandle::Real { value } => Some(AlphaHandle::Real { value: 1.0 - value }),
        AlphaHandle::Quadratic(qi) => {
            let v = QuadNumber::from_int(1) - qi.value();
            QuadraticIrrational::from_value(&v, 256).map(AlphaHandle::Quadratic)
        }
    }
}

impl CircleMap for PiecewiseMonotoneCircleMap {
    fn lift(&self, x: f64) -> f64 {
        let (r, k) = self.reduce(x);
        self.pieces[self.locate(r)].value(r) + k
    }

    fn lift_left(&self, x: f64) -> f64 {
        let (r, k) = self.reduce(x);
        let i = self.locate(r);
        let p = &self.pieces[i];
        if r != p.x0 {
            return p.value(r) + k;
        }
        if i == 0 {
            self.pieces[self.pieces.len() - 1].y1 + k - 1.0
        } else {
            self.pieces[i - 1].y1 + k
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        let (r, _) = self.reduce(x);
        self.pieces[self.locate(r)].slope(r)
    }

    fn plateaus(&self) -> Vec<ArcInterval> {
        let mut out: Vec<ArcInterval> = Vec::new();
        for p in &self.pieces {
            if !p.branch.is_plateau() {
                continue;
            }
            match out.last_mut() {
                Some(a) if (a.start + a.length - frac(p.x0)).abs() < 1e-15 => {
                    a.length += p.x1 - p.x0
                }
                _ => out.push(ArcInterval::closed(p.x0, p.x1 - p.x0)),
            }
        }
        out
    }

    fn jumps(&self) -> Vec<Jump> {
        let n = self.pieces.len();
        let mut out = Vec::new();
        for i in 0..n {
            let p = &self.pieces[i];
            let (left, right, at) = if i + 1 < n {
                (p.y1, self.pieces[i + 1].y0, self.pieces[i + 1].x0)
            } else {
                (p.y1 - 1.0, self.pieces[0].y0, self.pieces[0].x0)
            };
            if right > left {
                out.push(Jump { at, left, right });
            }
        }
        out
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| frac(p.x0)).collect()
    }

    fn rotation_handle(&self) -> Option<AlphaHandle> {
        self.handle.clone()
    }

    fn as_table(&self) -> Option<&PiecewiseMonotoneCircleMap> {
        Some(self)
    }

    fn preimage(&self, y: f64) -> (f64, f64) {
        let y_base = self.pieces[0].y0;
        let k = (y - y_base).floor();
        let s = y - k;
        // first piece whose top reaches s
        let n = self.pieces.len();
        let i = self.pieces.partition_point(|p| p.y1 < s);
        let lo = if i < n && self.pieces[i].y0 <= s {
            self.pieces[i].solve(s)
        } else if i < n {
            // s sits in the jump gap just before piece i
            self.pieces[i].x0
        } else {
            self.base + 1.0
        };
        // last piece whose bottom is at most s
        let j = self.pieces.partition_point(|p| p.y0 <= s);
        let hi = if j == 0 {
            self.base
        } else {
            let p = &self.pieces[j - 1];
            if s >= p.y1 {
                p.x1
            } else {
                p.solve(s)
            }
        };
        (lo + k, hi.max(lo) + k)
    }
}

/// Grid check of monotonicity and `F(x+1) = F(x) + 1`.
pub fn check_lift_invariants<M: CircleMap + ?Sized>(
    map: &M,
    grid: usize,
) -> Result<(), CircleMapError> {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        let f = map.lift(x);
        if f < prev - 1e-12 {
            return Err(CircleMapError::InvariantViolated(format!(
                "lift decreases near x = {x}"
            )));
        }
        let up = map.lift(x + 1.0);
        let d = up - f;
        // at a jump the shifted point may land on the other side by rounding
        let d_left = up - map.lift_left(x);
        if (d - 1.0).abs() > 1e-10 && (d_left - 1.0).abs() > 1e-10 {
            return Err(CircleMapError::InvariantViolated(format!(
                "F(x+1) − F(x) = {d} at x = {x}"
            )));
        }
        prev = f;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
