//! Arcs on the circle and the closest-return geometry of rigid rotations:
//! the intervals I_n, the orbit sets S_n(x), dynamic partitions, the
//! two-gap partition, and intersection multiplicity.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::{convergents, AlphaHandle, CfracError, ContinuedFraction, Convergent};
use crate::exact::{QuadNumber, Scalar};

/// Float comparisons in this module use this tolerance.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReturnsError {
    #[error("level {n} is beyond the period {period} of the rational rotation (expansion depth {depth})")]
    RationalBeyondPeriod { n: usize, period: i128, depth: usize },
    #[error("level must be at least {min}, got {n}")]
    LevelTooLow { n: usize, min: usize },
    #[error("the interior of T contains the orbit point R^{index}(x)")]
    InteriorMeetsOrbit { index: usize },
    #[error("dynamic partition defect: {0}")]
    PartitionDefect(String),
    #[error("rotation handle `{0}` has no exact value")]
    NotExact(String),
    #[error(transparent)]
    Cfrac(#[from] CfracError),
}

/// Oriented arc `[start, start + length]` on R/Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcInterval<S = f64> {
    pub start: S,
    pub length: S,
    pub closed_start: bool,
    pub closed_end: bool,
}

impl<S: Scalar> ArcInterval<S> {
    pub fn closed(start: S, length: S) -> Self {
        ArcInterval {
            start: start.fract(),
            length,
            closed_start: true,
            closed_end: true,
        }
    }

    pub fn open(start: S, length: S) -> Self {
        ArcInterval {
            start: start.fract(),
            length,
            closed_start: false,
            closed_end: false,
        }
    }

    pub fn point(at: S) -> Self {
        Self::closed(at, S::zero())
    }

    /// Closed arc running in the positive direction from `a` to `b`.
    pub fn from_endpoints(a: S, b: S) -> Self {
        let len = (b - a.clone()).fract();
        Self::closed(a, len)
    }

    /// Lifted right endpoint `start + length`.
    pub fn end(&self) -> S {
        self.start.clone() + self.length.clone()
    }

    pub fn is_point(&self) -> bool {
        self.length.is_zero_value()
    }

    pub fn translate(&self, by: &S) -> Self {
        ArcInterval {
            start: (self.start.clone() + by.clone()).fract(),
            ..self.clone()
        }
    }

    fn offset(&self, p: &S) -> S {
        (p.clone() - self.start.clone()).fract()
    }

    pub fn contains(&self, p: &S) -> bool {
        let off = self.offset(p);
        match off.cmp_total(&self.length) {
            Ordering::Less => !off.is_zero_value() || self.closed_start,
            Ordering::Equal => {
                self.closed_end || (off.is_zero_value() && self.closed_start)
            }
            Ordering::Greater => {
                // a full-length arc reaches its own start from the right
                off.is_zero_value() && self.closed_start
            }
        }
    }

    pub fn interior_contains(&self, p: &S) -> bool {
        let off = self.offset(p);
        !off.is_zero_value() && off.cmp_total(&self.length).is_lt()
    }

    /// True when the open interiors of the two arcs meet.
    pub fn interiors_overlap(&self, other: &Self) -> bool {
        if self.is_point() || other.is_point() {
            return false;
        }
        let off = self.offset(&other.start);
        off.is_zero_value()
            || off.cmp_total(&self.length).is_lt()
            || other.offset(&self.start).cmp_total(&other.length).is_lt()
    }

    pub fn to_f64(&self) -> ArcInterval<f64> {
        ArcInterval {
            start: self.start.to_f64(),
            length: self.length.to_f64(),
            closed_start: self.closed_start,
            closed_end: self.closed_end,
        }
    }
}

struct Piece<S> {
    lo: S,
    hi: S,
    closed_lo: bool,
    closed_hi: bool,
    degenerate: bool,
}

fn linear_pieces<S: Scalar>(arc: &ArcInterval<S>, out: &mut Vec<Piece<S>>) {
    let one = S::from_int(1);
    let s = arc.start.fract();
    if arc.is_point() {
        if arc.closed_start || arc.closed_end {
            out.push(Piece {
                lo: s.clone(),
                hi: s,
                closed_lo: true,
                closed_hi: true,
                degenerate: true,
            });
        }
        return;
    }
    if arc.length.cmp_total(&one) == Ordering::Equal {
        // the whole circle, its two endpoints being one point
        out.push(Piece {
            lo: s.clone(),
            hi: one,
            closed_lo: arc.closed_start || arc.closed_end,
            closed_hi: false,
            degenerate: false,
        });
        if !s.is_zero_value() {
            out.push(Piece {
                lo: S::zero(),
                hi: s,
                closed_lo: true,
                closed_hi: false,
                degenerate: false,
            });
        }
        return;
    }
    let end = s.clone() + arc.length.clone();
    match end.cmp_total(&one) {
        Ordering::Less => out.push(Piece {
            lo: s,
            hi: end,
            closed_lo: arc.closed_start,
            closed_hi: arc.closed_end,
            degenerate: false,
        }),
        Ordering::Equal => {
            out.push(Piece {
                lo: s,
                hi: one,
                closed_lo: arc.closed_start,
                closed_hi: false,
                degenerate: false,
            });
            if arc.closed_end {
                out.push(Piece {
                    lo: S::zero(),
                    hi: S::zero(),
                    closed_lo: true,
                    closed_hi: true,
                    degenerate: true,
                });
            }
        }
        Ordering::Greater => {
            out.push(Piece {
                lo: s,
                hi: one.clone(),
                closed_lo: arc.closed_start,
                closed_hi: false,
                degenerate: false,
            });
            out.push(Piece {
                lo: S::zero(),
                hi: end - one,
                closed_lo: true,
                closed_hi: arc.closed_end,
                degenerate: false,
            });
        }
    }
}

/// Maximum number of arcs sharing a common point, by an endpoint sweep.
///
/// Closed endpoints that coincide count as overlapping. An empty collection
/// has multiplicity 0.
pub fn intersection_multiplicity<S: Scalar>(arcs: &[ArcInterval<S>]) -> usize {
    let mut pieces = Vec::with_capacity(arcs.len() * 2);
    for a in arcs {
        linear_pieces(a, &mut pieces);
    }
    // (position, is_start, closed, degenerate)
    let mut events: Vec<(S, bool, bool, bool)> = Vec::with_capacity(pieces.len() * 2);
    for p in pieces {
        events.push((p.lo, true, p.closed_lo, p.degenerate));
        events.push((p.hi, false, p.closed_hi, p.degenerate));
    }
    events.sort_by(|a, b| a.0.cmp_total(&b.0));
    let mut active: i64 = 0;
    let mut best: i64 = 0;
    let mut i = 0;
    while i < events.len() {
        let mut j = i;
        let (mut open_ends, mut closed_starts, mut all_ends, mut all_starts) = (0, 0, 0, 0);
        while j < events.len() && events[j].0.cmp_total(&events[i].0) == Ordering::Equal {
            let (_, is_start, closed, degenerate) = (&events[j].0, events[j].1, events[j].2, events[j].3);
            if is_start {
                all_starts += 1;
                if closed {
                    closed_starts += 1;
                }
            } else {
                all_ends += 1;
                if !closed && !degenerate {
                    open_ends += 1;
                }
            }
            j += 1;
        }
        let at_point = active - open_ends + closed_starts;
        active = active - all_ends + all_starts;
        best = best.max(at_point).max(active);
        i = j;
    }
    best.max(0) as usize
}

/// Orbit data of the rotation R_α at one closest-return level.
#[derive(Clone, Debug)]
pub struct ReturnScaffold<S> {
    pub alpha: S,
    pub alpha_label: String,
    pub x: S,
    pub n: usize,
    pub cf: ContinuedFraction,
    conv: Vec<Convergent>,
}

impl ReturnScaffold<QuadNumber> {
    /// Exact scaffold for rational or quadratic-irrational handles.
    pub fn exact(alpha: &AlphaHandle, x: QuadNumber, n: usize) -> Result<Self, ReturnsError> {
        let value = alpha
            .exact_value()
            .ok_or_else(|| ReturnsError::NotExact(alpha.label()))?;
        let cf = alpha.expand(n + 1)?;
        Self::build(value, alpha.label(), cf, x, n)
    }
}

impl ReturnScaffold<f64> {
    /// Floating scaffold for generic reals; comparisons use [`FLOAT_TOL`].
    pub fn float(alpha: f64, x: f64, n: usize) -> Result<Self, ReturnsError> {
        let cf = crate::cfrac::expand_f64(alpha, n + 1)?;
        Self::build(alpha, format!("{alpha}"), cf, x, n)
    }
}

impl<S: Scalar> ReturnScaffold<S> {
    pub fn build(
        alpha: S,
        alpha_label: String,
        cf: ContinuedFraction,
        x: S,
        n: usize,
    ) -> Result<Self, ReturnsError> {
        if n > cf.depth() {
            let conv = convergents(&cf);
            return Err(ReturnsError::RationalBeyondPeriod {
                n,
                period: conv.last().map(|c| c.q).unwrap_or(1),
                depth: cf.depth(),
            });
        }
        let conv = convergents(&cf);
        Ok(ReturnScaffold {
            alpha,
            alpha_label,
            x: x.fract(),
            n,
            cf,
            conv,
        })
    }

    fn require_nondegenerate(&self, level: usize) -> Result<(), ReturnsError> {
        if self.cf.exact && level >= self.cf.depth() {
            return Err(ReturnsError::RationalBeyondPeriod {
                n: self.n,
                period: self.conv.last().map(|c| c.q).unwrap_or(1),
                depth: self.cf.depth(),
            });
        }
        Ok(())
    }

    /// q_k with q_{-1} = 0.
    pub fn q(&self, k: isize) -> i128 {
        if k < 0 {
            0
        } else {
            self.conv[k as usize].q
        }
    }

    pub fn a(&self, k: usize) -> i64 {
        self.cf.quotient(k).unwrap_or(0)
    }

    /// Signed displacement q_k α − p_k of the closest return R^{q_k}(x).
    pub fn displacement(&self, k: isize) -> S {
        if k < 0 {
            return S::from_int(-1);
        }
        let c = self.conv[k as usize];
        self.alpha.scale(c.q as i64, 1) - S::from_int(c.p as i64)
    }

    /// The closed arc I_k with endpoints x and R^{q_k}(x).
    pub fn closest_interval(&self, k: isize) -> ArcInterval<S> {
        let d = self.displacement(k);
        if d.cmp_total(&S::zero()).is_ge() {
            ArcInterval::closed(self.x.clone(), d)
        } else {
            ArcInterval::closed(self.x.clone() + d.clone(), -d)
        }
    }

    pub fn orbit_point(&self, i: i64) -> S {
        (self.x.clone() + self.alpha.scale(i, 1)).fract()
    }

    /// S_n(x) = {x, R(x), …, R^{q_n − 1}(x)}.
    pub fn orbit_set(&self) -> Vec<S> {
        (0..self.q(self.n as isize) as i64)
            .map(|i| self.orbit_point(i))
            .collect()
    }

    /// Closed arcs between cyclically adjacent points of S_n(x).
    pub fn gap_arcs(&self) -> Vec<ArcInterval<S>> {
        let mut pts = self.orbit_set();
        pts.sort_by(|a, b| a.cmp_total(b));
        cyclic_gaps(&pts)
            .into_iter()
            .zip(pts.iter())
            .map(|(len, start)| ArcInterval::closed(start.clone(), len))
            .collect()
    }

    /// q_n translates of I_{n−1} and q_{n−1} translates of I_n, checked to tile.
    pub fn dynamic_partition(&self) -> Result<Vec<ArcInterval<S>>, ReturnsError> {
        let n = self.n;
        if n < 2 {
            return Err(ReturnsError::LevelTooLow { n, min: 2 });
        }
        self.require_nondegenerate(n)?;
        let outer = self.closest_interval(n as isize - 1);
        let inner = self.closest_interval(n as isize);
        let mut arcs = Vec::new();
        for i in 0..self.q(n as isize) as i64 {
            arcs.push(outer.translate(&self.alpha.scale(i, 1)));
        }
        for i in 0..self.q(n as isize - 1) as i64 {
            arcs.push(inner.translate(&self.alpha.scale(i, 1)));
        }
        check_tiling(&arcs)?;
        Ok(arcs)
    }

    /// Cuts the circle at the first q_{n−1} + q_{n−2} orbit points.
    pub fn three_distance_points(&self) -> Result<ThreeDistance<S>, ReturnsError> {
        let n = self.n;
        if n < 1 {
            return Err(ReturnsError::LevelTooLow { n, min: 1 });
        }
        self.require_nondegenerate(n - 1)?;
        let count = self.q(n as isize - 1) + self.q(n as isize - 2);
        let mut pts: Vec<S> = (0..count as i64).map(|i| self.orbit_point(i)).collect();
        pts.sort_by(|a, b| a.cmp_total(b));
        let gaps = cyclic_gaps(&pts);
        let expected = [
            self.displacement(n as isize - 1).abs_value(),
            self.displacement(n as isize - 2).abs_value(),
        ];
        let mut counts = [0usize; 2];
        let mut stray = 0usize;
        for g in &gaps {
            if approx_eq(g, &expected[0]) {
                counts[0] += 1;
            } else if approx_eq(g, &expected[1]) {
                counts[1] += 1;
            } else {
                stray += 1;
            }
        }
        Ok(ThreeDistance {
            points: pts,
            histogram: length_histogram(&gaps),
            gaps,
            expected,
            counts,
            stray,
        })
    }

    /// Intersection multiplicity of {T, R(T), …, R^{q_n−1}(T)} against 2(a_n + 1).
    pub fn im_bound_check(&self, t: &ArcInterval<S>) -> Result<ImReport, ReturnsError> {
        let n = self.n;
        let q = self.q(n as isize) as i64;
        for i in 0..q {
            if t.interior_contains(&self.orbit_point(i)) {
                return Err(ReturnsError::InteriorMeetsOrbit { index: i as usize });
            }
        }
        let arcs: Vec<_> = (0..q).map(|i| t.translate(&self.alpha.scale(i, 1))).collect();
        let im = intersection_multiplicity(&arcs);
        let a_n = self.a(n);
        let bound = 2 * (a_n as usize + 1);
        Ok(ImReport {
            alpha: self.alpha_label.clone(),
            n,
            a_n,
            im,
            bound,
            ok: im <= bound,
        })
    }
}

fn approx_eq<S: Scalar>(a: &S, b: &S) -> bool {
    if S::is_exact() {
        a.cmp_total(b) == Ordering::Equal
    } else {
        (a.to_f64() - b.to_f64()).abs() <= FLOAT_TOL
    }
}

/// Lengths of the arcs from each sorted point to the next, cyclically.
fn cyclic_gaps<S: Scalar>(sorted: &[S]) -> Vec<S> {
    let m = sorted.len();
    (0..m)
        .map(|i| {
            if i + 1 < m {
                sorted[i + 1].clone() - sorted[i].clone()
            } else {
                sorted[0].clone() + S::from_int(1) - sorted[i].clone()
            }
        })
        .collect()
}

fn length_histogram<S: Scalar>(gaps: &[S]) -> Vec<(f64, usize)> {
    let mut sorted: Vec<&S> = gaps.iter().collect();
    sorted.sort_by(|a, b| a.cmp_total(b));
    let mut out: Vec<(S, usize)> = Vec::new();
    for g in sorted {
        match out.last_mut() {
            Some((v, c)) if approx_eq(v, g) => *c += 1,
            _ => out.push((g.clone(), 1)),
        }
    }
    out.into_iter().map(|(v, c)| (v.to_f64(), c)).collect()
}

fn check_tiling<S: Scalar>(arcs: &[ArcInterval<S>]) -> Result<(), ReturnsError> {
    let mut total = S::zero();
    for a in arcs {
        total = total + a.length.clone();
    }
    if !approx_eq(&total, &S::from_int(1)) {
        return Err(ReturnsError::PartitionDefect(format!(
            "total length {} != 1",
            total.to_f64()
        )));
    }
    let mut sorted: Vec<&ArcInterval<S>> = arcs.iter().collect();
    sorted.sort_by(|a, b| a.start.cmp_total(&b.start));
    for i in 0..sorted.len() {
        let a = sorted[i];
        let b = sorted[(i + 1) % sorted.len()];
        // next start must sit at or past this arc's end
        let gap = (b.start.clone() - a.start.clone()).fract();
        let gap = if gap.is_zero_value() && sorted.len() == 1 {
            S::from_int(1)
        } else {
            gap
        };
        let short = a.length.clone() - gap;
        let overlapping = if S::is_exact() {
            short.cmp_total(&S::zero()).is_gt()
        } else {
            short.to_f64() > FLOAT_TOL
        };
        if overlapping {
            return Err(ReturnsError::PartitionDefect(format!(
                "arcs at {} and {} overlap",
                a.start.to_f64(),
                b.start.to_f64()
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ThreeDistance<S> {
    pub points: Vec<S>,
    pub gaps: Vec<S>,
    /// |I_{n−1}| and |I_{n−2}|.
    pub expected: [S; 2],
    pub counts: [usize; 2],
    /// Gaps matching neither expected length.
    pub stray: usize,
    /// Distinct gap lengths with multiplicities.
    pub histogram: Vec<(f64, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImReport {
    pub alpha: String,
    pub n: usize,
    pub a_n: i64,
    pub im: usize,
    pub bound: usize,
    pub ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::QuadraticIrrational;

    fn arc(s: f64, e: f64) -> ArcInterval<f64> {
        ArcInterval::closed(s, e - s)
    }

    #[test]
    fn multiplicity_small_cases() {
        assert_eq!(intersection_multiplicity::<f64>(&[]), 0);
        assert_eq!(intersection_multiplicity(&[arc(0.0, 0.5), arc(0.25, 0.75)]), 2);
        assert_eq!(
            intersection_multiplicity(&[arc(0.0, 0.2), arc(0.3, 0.5), arc(0.6, 0.9)]),
            1
        );
        assert_eq!(
            intersection_multiplicity(&[arc(0.0, 0.4), arc(0.3, 0.7), arc(0.35, 0.9)]),
            3
        );
    }

    #[test]
    fn closed_endpoints_touching_count_twice() {
        assert_eq!(intersection_multiplicity(&[arc(0.0, 0.5), arc(0.5, 0.8)]), 2);
        let open = ArcInterval::open(0.5, 0.3);
        assert_eq!(intersection_multiplicity(&[arc(0.0, 0.5), open]), 1);
    }

    #[test]
    fn wrapping_arcs() {
        let a = ArcInterval::closed(0.9, 0.2);
        let b = arc(0.05, 0.1);
        assert_eq!(intersection_multiplicity(&[a.clone(), b]), 2);
        assert!(a.contains(&0.0));
        assert!(a.contains(&0.1));
        assert!(!a.contains(&0.11));
        assert_eq!(intersection_multiplicity(&[a, arc(0.5, 0.6)]), 1);
    }

    #[test]
    fn full_circle_covers_its_seam_once() {
        assert_eq!(intersection_multiplicity(&[ArcInterval::closed(0.0, 1.0)]), 1);
        assert_eq!(intersection_multiplicity(&[ArcInterval::closed(0.3, 1.0)]), 1);
        let open = ArcInterval::open(0.3, 1.0);
        assert_eq!(intersection_multiplicity(&[open, ArcInterval::point(0.3)]), 1);
        assert_eq!(intersection_multiplicity(&[ArcInterval::closed(0.3, 1.0), arc(0.1, 0.2)]), 2);
    }

    #[test]
    fn point_arcs() {
        let p = ArcInterval::point(0.3);
        assert!(p.contains(&0.3));
        assert!(!p.interior_contains(&0.3));
        assert_eq!(intersection_multiplicity(&[p.clone(), arc(0.1, 0.3)]), 2);
    }

    #[test]
    fn golden_dynamic_partition_level_three() {
        let s = ReturnScaffold::exact(&AlphaHandle::golden(), QuadNumber::from_int(0), 3).unwrap();
        let arcs = s.dynamic_partition().unwrap();
        assert_eq!(arcs.len(), 5);
        let i2 = s.closest_interval(2).length;
        let i3 = s.closest_interval(3).length;
        assert_eq!(arcs.iter().filter(|a| a.length == i2).count(), 3);
        assert_eq!(arcs.iter().filter(|a| a.length == i3).count(), 2);
        for (i, a) in arcs.iter().enumerate() {
            for b in &arcs[i + 1..] {
                assert!(!a.interiors_overlap(b));
            }
        }
    }

    #[test]
    fn rational_beyond_period_is_rejected() {
        let half = AlphaHandle::Rational { p: 1, q: 2 };
        let err = ReturnScaffold::exact(&half, QuadNumber::from_int(0), 3).unwrap_err();
        assert!(matches!(err, ReturnsError::RationalBeyondPeriod { period: 2, .. }));
    }

    #[test]
    fn golden_three_distance() {
        let s = ReturnScaffold::exact(&AlphaHandle::golden(), QuadNumber::from_int(0), 4).unwrap();
        let td = s.three_distance_points().unwrap();
        assert_eq!(td.stray, 0);
        assert!(td.histogram.len() <= 2);
    }

    #[test]
    fn level_one_has_single_gap() {
        let s = ReturnScaffold::exact(&AlphaHandle::golden(), QuadNumber::from_int(0), 1).unwrap();
        let td = s.three_distance_points().unwrap();
        assert_eq!(td.points.len(), 1);
        assert_eq!(td.histogram, vec![(1.0, 1)]);
    }

    #[test]
    fn silver_three_distance_counts() {
        let a = AlphaHandle::Quadratic(QuadraticIrrational::constant(2));
        let s = ReturnScaffold::exact(&a, QuadNumber::from_int(0), 3).unwrap();
        let td = s.three_distance_points().unwrap();
        // q_2 = 5, q_1 = 2 points in total
        assert_eq!(td.points.len(), 7);
        assert_eq!(td.histogram.len(), 2);
        // q_1 gaps of length |I_2| and q_2 of length |I_1|
        assert_eq!(td.counts, [2, 5]);
    }

    #[test]
    fn im_bound_on_golden_gap() {
        let s = ReturnScaffold::exact(&AlphaHandle::golden(), QuadNumber::from_int(0), 5).unwrap();
        for t in s.gap_arcs() {
            let r = s.im_bound_check(&t).unwrap();
            assert_eq!(r.bound, 4);
            assert!(r.ok, "{r:?}");
        }
        let p = ArcInterval::point(s.orbit_point(2));
        assert!(s.im_bound_check(&p).unwrap().im <= 2);
    }

    #[test]
    fn im_precondition_violation() {
        let s = ReturnScaffold::exact(&AlphaHandle::golden(), QuadNumber::from_int(0), 4).unwrap();
        let whole = ArcInterval::closed(QuadNumber::from_ratio(-1, 100), QuadNumber::from_ratio(1, 2));
        assert!(matches!(
            s.im_bound_check(&whole),
            Err(ReturnsError::InteriorMeetsOrbit { .. })
        ));
    }

    #[test]
    fn float_scaffold_matches_exact() {
        let g = AlphaHandle::golden().to_f64();
        let s = ReturnScaffold::float(g, 0.0, 4).unwrap();
        let td = s.three_distance_points().unwrap();
        assert_eq!(td.stray, 0);
        assert!(s.dynamic_partition().is_ok());
    }
}
