//! Constructors for circle maps and monotone families.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gap_measure::{GapMeasure, GapOrbit, GapRule, GapWeights, DEFAULT_TRUNCATION};
use super::{Branch, CircleMap, CircleMapError, Jump, Piece, PiecewiseMonotoneCircleMap, Provenance};
use crate::cfrac::AlphaHandle;
use crate::closest_returns::ArcInterval;

/// Rigid rotation `x ↦ x + α`.
pub fn build_rotation(alpha: f64) -> PiecewiseMonotoneCircleMap {
    PiecewiseMonotoneCircleMap::new(vec![Piece::affine(0.0, 1.0, alpha, alpha + 1.0)])
        .expect("rotation table is valid")
        .with_provenance(Provenance::Rotation)
}

pub fn build_rotation_handle(alpha: &AlphaHandle) -> PiecewiseMonotoneCircleMap {
    build_rotation(alpha.to_f64()).with_handle(alpha.clone())
}

/// Piecewise-affine map through `knots` (x ascending over less than one
/// turn); the table closes with `(x_0 + 1, y_0 + 1)`. Equal consecutive
/// values give plateaus.
pub fn build_piecewise_affine(knots: &[(f64, f64)]) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    if knots.is_empty() {
        return Err(CircleMapError::InvalidTable("no knots".into()));
    }
    let (x0, y0) = knots[0];
    let mut pts = knots.to_vec();
    pts.push((x0 + 1.0, y0 + 1.0));
    let pieces = pts
        .windows(2)
        .map(|w| Piece::affine(w[0].0, w[1].0, w[0].1, w[1].1))
        .collect();
    PiecewiseMonotoneCircleMap::new(pieces)
}

/// Plateau on `[0, width]` at lift value `omega`, followed by the sine
/// branch `ω + g((x − w)/(1 − w))`, `g(s) = s + b·sin(2πs)/(2π)`.
pub fn build_flat_spot(omega: f64, width: f64, b: f64) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    if !(width > 0.0 && width < 1.0) {
        return Err(CircleMapError::BadPlateaus(format!("flat spot width {width} not in (0,1)")));
    }
    let pieces = vec![
        Piece {
            x0: 0.0,
            x1: width,
            y0: omega,
            y1: omega,
            branch: Branch::Plateau,
        },
        Piece {
            x0: width,
            x1: 1.0,
            y0: omega,
            y1: omega + 1.0,
            branch: Branch::Sine { b },
        },
    ];
    Ok(PiecewiseMonotoneCircleMap::new(pieces)?.with_provenance(Provenance::FlatSpot { width, b, omega }))
}

/// The `α` of a bounded-type handle.
pub fn bounded_type_alpha(alpha: &AlphaHandle) -> Result<f64, CircleMapError> {
    if alpha.bounded_type().is_none() {
        return Err(CircleMapError::NotBoundedType(alpha.label()));
    }
    Ok(alpha.to_f64())
}

/// Denjoy-type map: one two-sided orbit of gaps seeded at `seed`.
///
/// Zero total weight gives the plain rotation.
pub fn build_denjoy(
    alpha: &AlphaHandle,
    weights: GapWeights,
    seed: f64,
    truncation: Option<i64>,
) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    let a = bounded_type_alpha(alpha)?;
    if weights.mass() == 0.0 {
        return Ok(build_rotation_handle(alpha));
    }
    let orbit = GapOrbit {
        seed,
        rule: GapRule::TwoSided,
        weights,
    };
    GapMeasure::new(a, vec![orbit], truncation.unwrap_or(DEFAULT_TRUNCATION))?.into_map(Some(alpha.clone()))
}

/// One gap orbit ending (plateau) or starting (jump) at index 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitGapSpec {
    pub seed: f64,
    /// Total length of the gaps along this orbit.
    pub mass: f64,
}

fn one_sided(
    alpha: &AlphaHandle,
    specs: &[OrbitGapSpec],
    rule: GapRule,
    truncation: Option<i64>,
) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    let a = bounded_type_alpha(alpha)?;
    let total: f64 = specs.iter().map(|s| s.mass).sum();
    if total >= 1.0 {
        return Err(CircleMapError::BadPlateaus(format!("total gap length {total} ≥ 1")));
    }
    if specs.is_empty() {
        return Ok(build_rotation_handle(alpha));
    }
    let orbits = specs
        .iter()
        .map(|s| GapOrbit {
            seed: s.seed,
            rule,
            weights: GapWeights::inverse_square(s.mass),
        })
        .collect();
    GapMeasure::new(a, orbits, truncation.unwrap_or(DEFAULT_TRUNCATION))?.into_map(Some(alpha.clone()))
}

/// Continuous map with one plateau per spec, semiconjugate to `R_α`.
///
/// The plateau is the gap with index 0; the gaps with negative index are its
/// preimages.
pub fn build_cherry_return(
    alpha: &AlphaHandle,
    plateaus: &[OrbitGapSpec],
    truncation: Option<i64>,
) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    one_sided(alpha, plateaus, GapRule::Plateau, truncation)
}

/// Map with one jump per spec; the skipped arc is the gap with index 0 and
/// its forward images are the gaps with positive index.
pub fn build_jump_return(
    alpha: &AlphaHandle,
    jumps: &[OrbitGapSpec],
    truncation: Option<i64>,
) -> Result<PiecewiseMonotoneCircleMap, CircleMapError> {
    one_sided(alpha, jumps, GapRule::Jump, truncation)
}

/// Lifts `H_ε` of the perturbing homeomorphisms in `f_ε = h_ε ∘ f_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Homeo {
    /// `H_ε(y) = y + ε`.
    Rotation,
    /// `H_ε(y) = y + ε·b(y)`, `b = cos²` bump of half-width `width` at `center`.
    Bump { center: f64, width: f64 },
}

impl Homeo {
    fn bump(center: f64, width: f64, y: f64) -> (f64, f64) {
        let d = super::frac(y - center + 0.5) - 0.5;
        if d.abs() >= width {
            return (0.0, 0.0);
        }
        let phase = PI * d / (2.0 * width);
        let c = phase.cos();
        (c * c, -(PI / (2.0 * width)) * (2.0 * phase).sin())
    }

    pub fn lift(&self, eps: f64, y: f64) -> f64 {
        match *self {
            Homeo::Rotation => y + eps,
            Homeo::Bump { center, width } => y + eps * Self::bump(center, width, y).0,
        }
    }

    pub fn derivative(&self, eps: f64, y: f64) -> f64 {
        match *self {
            Homeo::Rotation => 1.0,
            Homeo::Bump { center, width } => 1.0 + eps * Self::bump(center, width, y).1,
        }
    }

    /// `∂H_ε(y)/∂ε`.
    pub fn speed(&self, y: f64) -> f64 {
        match *self {
            Homeo::Rotation => 1.0,
            Homeo::Bump { center, width } => Self::bump(center, width, y).0,
        }
    }

    fn max_slope(&self) -> f64 {
        match *self {
            Homeo::Rotation => 0.0,
            Homeo::Bump { width, .. } => PI / (2.0 * width),
        }
    }
}

/// `f_ε = h_ε ∘ f_0` for `ε` in a window.
#[derive(Clone)]
pub struct MonotoneFamily {
    pub base: Arc<dyn CircleMap>,
    pub homeo: Homeo,
    pub window: (f64, f64),
    /// Point at which `ε ↦ F_ε` is strictly increasing.
    pub point: f64,
}

impl std::fmt::Debug for MonotoneFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneFamily")
            .field("homeo", &self.homeo)
            .field("window", &self.window)
            .field("point", &self.point)
            .finish()
    }
}

impl MonotoneFamily {
    /// Checks monotonicity in `x` over the window and strict growth in `ε` at
    /// the lift value `F_0(point)`.
    pub fn new(
        base: Arc<dyn CircleMap>,
        homeo: Homeo,
        window: (f64, f64),
        point: f64,
    ) -> Result<Self, CircleMapError> {
        let (lo, hi) = window;
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(CircleMapError::NonMonotoneFamily(format!(
                "window [{lo}, {hi}] must contain 0"
            )));
        }
        let worst = lo.abs().max(hi.abs()) * homeo.max_slope();
        if worst >= 1.0 {
            return Err(CircleMapError::NonMonotoneFamily(format!(
                "|ε|·max|b′| = {worst} ≥ 1 makes h_ε non-monotone"
            )));
        }
        if homeo.speed(base.lift(point)) <= 0.0 {
            return Err(CircleMapError::NonMonotoneFamily(format!(
                "ε ↦ F_ε is not strictly increasing at {point}"
            )));
        }
        let fam = MonotoneFamily {
            base,
            homeo,
            window,
            point,
        };
        // grid check of ε-monotonicity
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            let mut prev = f64::NEG_INFINITY;
            for j in 0..=32 {
                let e = lo + (hi - lo) * j as f64 / 32.0;
                let v = fam.member(e).lift(x);
                if v < prev - 1e-14 {
                    return Err(CircleMapError::NonMonotoneFamily(format!(
                        "lift at {x} decreases in ε near {e}"
                    )));
                }
                prev = v;
            }
        }
        Ok(fam)
    }

    pub fn member(&self, eps: f64) -> FamilyMember {
        FamilyMember {
            base: self.base.clone(),
            homeo: self.homeo,
            eps,
        }
    }
}

#[derive(Clone)]
pub struct FamilyMember {
    pub base: Arc<dyn CircleMap>,
    pub homeo: Homeo,
    pub eps: f64,
}

impl CircleMap for FamilyMember {
    fn lift(&self, x: f64) -> f64 {
        self.homeo.lift(self.eps, self.base.lift(x))
    }

    fn lift_left(&self, x: f64) -> f64 {
        self.homeo.lift(self.eps, self.base.lift_left(x))
    }

    fn derivative(&self, x: f64) -> f64 {
        self.homeo.derivative(self.eps, self.base.lift(x)) * self.base.derivative(x)
    }

    fn plateaus(&self) -> Vec<ArcInterval> {
        self.base.plateaus()
    }

    fn jumps(&self) -> Vec<Jump> {
        self.base
            .jumps()
            .into_iter()
            .map(|j| Jump {
                at: j.at,
                left: self.homeo.lift(self.eps, j.left),
                right: self.homeo.lift(self.eps, j.right),
            })
            .collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }
}
