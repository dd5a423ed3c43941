//! Twist perturbations supported near a transverse loop, their induced
//! return-map families, and the search for closed orbits at convergent
//! rotation numbers.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::{convergents, AlphaHandle};
use crate::circle_map::{CircleMap, CircleMapError, Homeo, MonotoneFamily};
use crate::rotation_number::{compare_rotation, solve_parameter_for_rational, RotationError};
use crate::torus_flow::field::{jet_norm_distance, Profile, TorusVectorField, TwistTerm};
use crate::torus_flow::integrate::{Outcome, Tracer, DEFAULT_TOL};
use crate::torus_flow::loops::TransverseLoop;
use crate::torus_flow::returns::{first_return, induced_return_map_with, ReturnMap, ReturnOptions, ReturnPoint};
use crate::torus_flow::FlowError;

pub const CLOSURE_TOL: f64 = 1e-6;
/// Parameter samples tried inside a locking interval.
pub const LOCK_SAMPLES: usize = 16;
pub const JET_GRID: usize = 256;

#[derive(Debug, Error)]
pub enum TwistError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error(transparent)]
    Map(#[from] CircleMapError),
    #[error("twist families need a straight loop x = const")]
    CurvedLoop,
    #[error("a_max must be positive, got {0}")]
    BadRange(f64),
    #[error("p is not non-trivially recurrent: {0}")]
    NotRecurrent(String),
    #[error("induced family is not monotone in a: {0}")]
    NotMonotone(String),
    #[error("no convergent target is reachable below a_max")]
    NoTargets,
}

/// `Y_a = X + a·ψ((x − x0)/h)·∂_y` for `0 ≤ a < a_max`.
#[derive(Clone, Debug)]
pub struct TwistFamily {
    pub base: TorusVectorField,
    pub lp: TransverseLoop,
    pub half_width: f64,
    pub profile: Profile,
    pub a_max: f64,
    /// `∫ψ` over the strip, and over its parts after and before the loop.
    pub c: f64,
    pub c_after: f64,
    pub c_before: f64,
    /// Smallest transversality margin of the loop over the sampled range.
    pub min_margin: f64,
}

impl TwistFamily {
    pub fn term(&self, a: f64) -> TwistTerm {
        TwistTerm {
            x0: self.lp.x0,
            half_width: self.half_width,
            profile: self.profile,
            a,
        }
    }

    pub fn member(&self, a: f64) -> Result<TorusVectorField, FlowError> {
        self.base.clone().with_twist(self.term(a))
    }

    /// Return-map lift of `Y_a` from `f_0`: `F_a(y) = F_0(y + a·c_after) + a·c_before`.
    pub fn compose(&self, f0: &dyn CircleMap, a: f64, y: f64) -> f64 {
        f0.lift(y + a * self.c_after) + a * self.c_before
    }
}

pub fn build_twist_family(
    field: &TorusVectorField,
    lp: &TransverseLoop,
    half_width: f64,
    profile: Profile,
    a_max: f64,
) -> Result<TwistFamily, TwistError> {
    if !lp.is_straight() {
        return Err(TwistError::CurvedLoop);
    }
    if !(a_max > 0.0) {
        return Err(TwistError::BadRange(a_max));
    }
    let term = TwistTerm {
        x0: lp.x0,
        half_width,
        profile,
        a: a_max,
    };
    // rejects strips meeting a cell patch (and so any singularity)
    let top = field.base_without_twist().with_twist(term)?;
    let mut min_margin = f64::INFINITY;
    for k in 0..=8 {
        let a = a_max * k as f64 / 8.0;
        let f = top.clone().with_twist(TwistTerm { a, ..term })?;
        min_margin = min_margin.min(lp.transversality_margin(&f, 512));
    }
    if !(min_margin > 0.0) {
        return Err(FlowError::NotTransverse { margin: min_margin }.into());
    }
    let c = term.mass();
    let c_before = term.partial_mass(half_width);
    Ok(TwistFamily {
        base: field.base_without_twist(),
        lp: lp.clone(),
        half_width,
        profile,
        a_max,
        c,
        c_after: c - c_before,
        c_before,
        min_margin,
    })
}

impl TorusVectorField {
    fn base_without_twist(&self) -> TorusVectorField {
        let mut f = self.clone();
        f.twist = None;
        f
    }
}

/// `f_a` on the loop, conjugated to `R_{a·c} ∘ f_0` so it fits a monotone family.
pub struct InducedFamily {
    pub f0: ReturnMap,
    /// Family in the variable `ε = a·c`.
    pub family: MonotoneFamily,
    /// Largest disagreement between the composed and the integrated return.
    pub composition_error: f64,
}

impl std::fmt::Debug for InducedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InducedFamily")
            .field("composition_error", &self.composition_error)
            .finish()
    }
}

pub fn induced_family(fam: &TwistFamily, resolution: usize) -> Result<InducedFamily, TwistError> {
    let opts = ReturnOptions {
        tol: DEFAULT_TOL * 0.1,
        map_tol: 1e-10,
        ..ReturnOptions::with_resolution(resolution)
    };
    let f0 = induced_return_map_with(&fam.base, &fam.lp, &opts)?;
    let base: Arc<dyn CircleMap> = Arc::new(f0.map.clone());
    let plateau_free = (0..64)
        .map(|i| (i as f64 + 0.5) / 64.0)
        .find(|&y| f0.map.derivative(y) > 0.0)
        .unwrap_or(0.5);
    let family = MonotoneFamily::new(base, Homeo::Rotation, (0.0, fam.a_max * fam.c), plateau_free)?;

    // integrate a few members directly and compare with the composition
    let mut err: f64 = 0.0;
    let ys = [0.1, 0.37, 0.61, 0.88];
    let mut prev: Vec<f64> = vec![f64::NEG_INFINITY; ys.len()];
    for k in 0..=4 {
        let a = fam.a_max * k as f64 / 4.0;
        let ya = fam.member(a)?;
        let y0 = fam.base.clone();
        for (i, &y) in ys.iter().enumerate() {
            let direct = first_return(&ya, &fam.lp, y, DEFAULT_TOL * 0.1, 1e4);
            let shifted = first_return(&y0, &fam.lp, y + a * fam.c_after, DEFAULT_TOL * 0.1, 1e4);
            if let (ReturnPoint::Returned { y: d, .. }, ReturnPoint::Returned { y: s, .. }) = (direct, shifted) {
                err = err.max((d - (s + a * fam.c_before)).abs());
                if d <= prev[i] && k > 0 {
                    return Err(TwistError::NotMonotone(format!("return of {y} does not grow at a = {a}")));
                }
                prev[i] = d;
            }
        }
    }
    Ok(InducedFamily {
        f0,
        family,
        composition_error: err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheck {
    pub start: f64,
    pub expected_period: usize,
    pub crossings: usize,
    /// `(y-winding, loop crossings)` of the closed orbit.
    pub homology: (i64, i64),
    pub residual: f64,
    pub success: bool,
    pub failure: Option<String>,
}

/// Flows the loop point `y` through `q` loop crossings and measures how far
/// it lands from where it started.
pub fn verify_closed_orbit(
    field: &TorusVectorField,
    y: f64,
    lp: &TransverseLoop,
    q: usize,
    expected_p: Option<i64>,
) -> OrbitCheck {
    let mut tr = Tracer::new(field);
    tr.section = Some(lp);
    tr.tol = DEFAULT_TOL;
    tr.max_crossings = Some(q);
    let seg = tr.run([lp.x0 + lp.g(y), y], 1e4 * q as f64);
    let crossings = seg.crossings.len();
    let mut check = OrbitCheck {
        start: y,
        expected_period: q,
        crossings,
        homology: (0, crossings as i64),
        residual: f64::NAN,
        success: false,
        failure: None,
    };
    match seg.outcome {
        Outcome::Crossings => {
            let d = seg.crossings[q - 1].y - y;
            let w = d.round();
            check.homology = (w as i64, q as i64);
            check.residual = (d - w).abs();
            let winding_ok = expected_p.is_none_or(|p| p == w as i64);
            check.success = check.residual < CLOSURE_TOL && winding_ok;
            if !check.success {
                check.failure = Some(if winding_ok {
                    format!("orbit misses its start by {:.3e}", check.residual)
                } else {
                    format!("winding {} differs from expected {}", w, expected_p.unwrap())
                });
            }
        }
        Outcome::Captured { singularity } => {
            check.failure = Some(format!("orbit enters the basin of singularity {singularity}"));
        }
        Outcome::NearSingularity { singularity, .. } => {
            check.failure = Some(format!("orbit stalls at singularity {singularity}"));
        }
        other => check.failure = Some(format!("orbit did not close: {other:?}")),
    }
    check
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Parameter tuned so that `p` itself is periodic.
    ThroughP,
    /// Periodic point of a sampled parameter inside the locking interval.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingEntry {
    /// Index of the convergent.
    pub n: usize,
    pub p_n: i64,
    pub q_n: i64,
    pub a_n: f64,
    /// Locking interval of the sampled family, in `a`.
    pub locking: (f64, f64),
    pub x_n: f64,
    pub distance_to_p: f64,
    pub closure_residual: f64,
    pub homology: (i64, i64),
    /// Distance of the sampled orbit of `x_n` to the plateaus, if any.
    pub plateau_distance: Option<f64>,
    pub approx_cr_distance: f64,
    /// Torus translation taking `p` to `x_n` on the loop.
    pub translation: [f64; 2],
    pub translated_cr_distance: f64,
    pub selection: Selection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedTarget {
    pub n: usize,
    pub p: i64,
    pub q: i64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingResult {
    pub p: f64,
    pub handle: AlphaHandle,
    pub c: f64,
    /// `C` with `approx_cr_distance(Y_a, X) = C·a` on the jet grid.
    pub jet_constant: f64,
    pub entries: Vec<ClosingEntry>,
    pub skipped: Vec<SkippedTarget>,
    pub a_decreasing: bool,
    pub distance_nonincreasing: bool,
    pub all_closed: bool,
}

fn orbit_plateau_distance(f0: &dyn CircleMap, fam: &TwistFamily, a: f64, x: f64, q: usize) -> Option<f64> {
    let plats = f0.plateaus();
    if plats.is_empty() {
        return None;
    }
    // the composed map meets the plateaus of f0 at y + a·c_after
    let mut y = x;
    let mut best = f64::INFINITY;
    for _ in 0..q {
        let z = y + a * fam.c_after;
        for p in &plats {
            let d = crate::circle_map::frac(z - p.start);
            let inside = d <= p.length;
            let dist = if inside { 0.0 } else { (d - p.length).min(1.0 - d) };
            best = best.min(dist);
        }
        y = fam.compose(f0, a, y);
    }
    Some(best)
}

/// `a` in `[lo, hi]` with `F_a^q(x) = x + p` on the sampled family.
fn periodic_parameter(f0: &dyn CircleMap, fam: &TwistFamily, x: f64, p: i64, q: usize, lo: f64, hi: f64) -> f64 {
    let h = |a: f64| {
        let mut y = x;
        for _ in 0..q {
            y = fam.compose(f0, a, y);
        }
        y - x - p as f64
    };
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if h(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Zeros of `F_a^q(x) − x − p` on the sampled family, refined by bisection.
fn periodic_points(f0: &dyn CircleMap, fam: &TwistFamily, a: f64, p: i64, q: usize) -> Vec<f64> {
    let g = |x: f64| {
        let mut y = x;
        for _ in 0..q {
            y = fam.compose(f0, a, y);
        }
        y - x - p as f64
    };
    let n = 2048;
    let vals: Vec<f64> = (0..=n).map(|i| g(i as f64 / n as f64)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (x0, x1) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        if vals[i] == 0.0 {
            out.push(x0);
            continue;
        }
        if vals[i].signum() != vals[i + 1].signum() && vals[i + 1] != 0.0 {
            let (mut a, mut b) = (x0, x1);
            let sa = vals[i].signum();
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if g(m).signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
    }
    out
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - d.round()).abs()
}

/// Lifted `q`-crossing image of the loop point `y` under `field`, `None` if
/// the orbit settles or stalls.
fn flow_return(field: &TorusVectorField, lp: &TransverseLoop, y: f64, q: usize) -> Option<f64> {
    let mut tr = Tracer::new(field);
    tr.section = Some(lp);
    tr.tol = DEFAULT_TOL * 0.1;
    tr.max_crossings = Some(q);
    let seg = tr.run([lp.x0 + lp.g(y), y], 1e4 * q as f64);
    matches!(seg.outcome, Outcome::Crossings).then(|| seg.crossings[q - 1].y)
}

/// Root of a non-decreasing `h` near `x`, bracketing outwards from `step`.
fn refine_root(h: impl Fn(f64) -> Option<f64>, x: f64, step: f64, lo_lim: f64, hi_lim: f64) -> Option<f64> {
    let mut d = step;
    let (mut lo, mut hi) = (x, x);
    let mut found = false;
    for _ in 0..24 {
        lo = (x - d).max(lo_lim);
        hi = (x + d).min(hi_lim);
        if h(lo)? <= 0.0 && h(hi)? >= 0.0 {
            found = true;
            break;
        }
        d *= 4.0;
    }
    if !found {
        return None;
    }
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if h(m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

struct Closed {
    a: f64,
    x: f64,
    plateau_distance: Option<f64>,
    selection: Selection,
    lock: (f64, f64),
}

fn close_one(fam: &TwistFamily, ind: &InducedFamily, p0: f64, pn: i64, qn: i64) -> Result<Closed, String> {
    let f0 = &ind.f0.map;
    let q = qn as usize;
    let lock = solve_parameter_for_rational(&ind.family, pn, qn, ind.family.window).map_err(|e| e.to_string())?;
    let (a_lo, a_hi) = (lock.s_lo / fam.c, lock.s_hi / fam.c);
    let pad = 1e-6 + 0.5 * (a_hi - a_lo);
    let range = ((a_lo - pad).max(0.0), (a_hi + pad).min(fam.a_max));

    // p itself periodic
    let a_star = periodic_parameter(f0, fam, p0, pn, q, range.0, range.1);
    let dist = orbit_plateau_distance(f0, fam, a_star, p0, q);
    if dist.is_none_or(|d| d > 0.0) {
        let h = |a: f64| -> Option<f64> {
            let f = fam.member(a).ok()?;
            Some(flow_return(&f, &fam.lp, p0, q)? - p0 - pn as f64)
        };
        if let Some(a) = refine_root(h, a_star, 1e-12 + 1e-9 * (a_hi - a_lo), range.0, range.1) {
            return Ok(Closed {
                a,
                x: p0,
                plateau_distance: dist,
                selection: Selection::ThroughP,
                lock: (a_lo, a_hi),
            });
        }
    }

    // sampled parameters: the periodic points bracketing p most tightly,
    // keeping whichever of the pair has a plateau-free orbit
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..LOCK_SAMPLES {
        let a = a_lo + (a_hi - a_lo) * (k as f64 + 0.5) / LOCK_SAMPLES as f64;
        let pts = periodic_points(f0, fam, a, pn, q);
        let offset = |x: f64| crate::circle_map::frac(x - p0);
        let below = pts.iter().copied().max_by(|u, v| offset(*u).total_cmp(&offset(*v)));
        let above = pts.iter().copied().min_by(|u, v| offset(*u).total_cmp(&offset(*v)));
        for x in below.into_iter().chain(above) {
            if orbit_plateau_distance(f0, fam, a, x, q).is_some_and(|d| d <= 0.0) {
                continue;
            }
            let dp = circle_dist(x, p0);
            if best.is_none_or(|b| dp < b.2) {
                best = Some((a, x, dp));
            }
        }
    }
    let (a, x, _) = best.ok_or("both periodic points bracketing p meet a plateau at every sampled parameter")?;
    let f = fam.member(a).map_err(|e| e.to_string())?;
    let h = |y: f64| -> Option<f64> { Some(flow_return(&f, &fam.lp, y, q)? - y - pn as f64) };
    // repelling points have h increasing, attracting ones decreasing
    let x_ref = refine_root(&h, x, 1e-7, x - 0.01, x + 0.01)
        .or_else(|| refine_root(|y| h(y).map(|v| -v), x, 1e-7, x - 0.01, x + 0.01))
        .ok_or("true-flow periodic point not bracketed")?;
    Ok(Closed {
        a,
        x: x_ref,
        plateau_distance: orbit_plateau_distance(f0, fam, a, x_ref, q),
        selection: Selection::Sampled,
        lock: (a_lo, a_hi),
    })
}

/// Closes the recurrent loop point `p` at the first `n_targets` convergents
/// above the base rotation number.
pub fn closing_search(fam: &TwistFamily, ind: &InducedFamily, p: f64, n_targets: usize) -> Result<ClosingResult, TwistError> {
    let handle = fam
        .base
        .handle()
        .ok_or_else(|| TwistError::NotRecurrent("the base field has no rotation handle".into()))?;
    if handle.is_rational() {
        return Err(TwistError::NotRecurrent(format!("rotation number {} is rational", handle.label())));
    }
    if handle.bounded_type().is_none() {
        return Err(TwistError::NotRecurrent(format!("{} is not of bounded type", handle.label())));
    }
    let f0 = &ind.f0.map;
    if ind.f0.basins.iter().any(|b| {
        let d = crate::circle_map::frac(p - b.from);
        d > 0.0 && d < b.to - b.from
    }) {
        return Err(TwistError::NotRecurrent(format!("{p} falls into a basin before returning")));
    }
    let alpha = handle.to_f64();
    let conv = convergents(&handle.expand(40).map_err(RotationError::from)?);
    let top = ind.family.member(ind.family.window.1);
    let mut targets = Vec::new();
    let mut skipped = Vec::new();
    for c in conv.iter().filter(|c| c.q > 0 && (c.p as f64) > alpha * c.q as f64) {
        let (pn, qn) = (c.p as i64, c.q as i64);
        if compare_rotation(f0, pn, qn) != std::cmp::Ordering::Less {
            continue;
        }
        if compare_rotation(&top, pn, qn) == std::cmp::Ordering::Less {
            skipped.push(SkippedTarget {
                n: c.n,
                p: pn,
                q: qn,
                reason: "beyond a_max".into(),
            });
            continue;
        }
        targets.push((c.n, pn, qn));
        if targets.len() == n_targets {
            break;
        }
    }
    if targets.is_empty() {
        return Err(TwistError::NoTargets);
    }
    let jet_constant = jet_norm_distance(&fam.member(1.0)?, &fam.base, 4, JET_GRID)?;
    let results: Vec<(usize, i64, i64, Result<Closed, String>)> = targets
        .par_iter()
        .map(|&(n, pn, qn)| (n, pn, qn, close_one(fam, ind, p, pn, qn)))
        .collect();
    let mut entries = Vec::new();
    for (n, pn, qn, r) in results {
        match r {
            Ok(c) => {
                let y = fam.member(c.a)?;
                let check = verify_closed_orbit(&y, c.x, &fam.lp, qn as usize, Some(pn));
                let jd = jet_norm_distance(&y, &fam.base, 4, JET_GRID)?;
                let v = [0.0, c.x - p];
                let jd_t = jet_norm_distance(&y.translated(v), &fam.base.translated(v), 4, JET_GRID)?;
                entries.push(ClosingEntry {
                    n,
                    p_n: pn,
                    q_n: qn,
                    a_n: c.a,
                    locking: c.lock,
                    x_n: c.x,
                    distance_to_p: circle_dist(c.x, p),
                    closure_residual: check.residual,
                    homology: check.homology,
                    plateau_distance: c.plateau_distance,
                    approx_cr_distance: jd,
                    translation: v,
                    translated_cr_distance: jd_t,
                    selection: c.selection,
                });
            }
            Err(reason) => skipped.push(SkippedTarget { n, p: pn, q: qn, reason }),
        }
    }
    let a_decreasing = entries.windows(2).all(|w| w[1].a_n < w[0].a_n);
    let distance_nonincreasing = entries.windows(2).all(|w| w[1].distance_to_p <= w[0].distance_to_p + 1e-12);
    let all_closed = entries
        .iter()
        .all(|e| e.closure_residual < CLOSURE_TOL && e.homology == (e.p_n, e.q_n));
    Ok(ClosingResult {
        p,
        handle,
        c: fam.c,
        jet_constant,
        entries,
        skipped,
        a_decreasing,
        distance_nonincreasing,
        all_closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_flow::{build_blowup, CellKind, CellSpec};

    fn rigid(profile: Profile) -> TwistFamily {
        let f = build_blowup(&AlphaHandle::golden(), &[]).unwrap();
        build_twist_family(&f, &TransverseLoop::vertical(0.3), 0.15, profile, 0.5).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn strip_mass_matches_quadrature() {
        let h = 0.15;
        let poly = simpson(|x: f64| (1.0 - (x / h).powi(2)).powi(5), -h, h, 2000);
        let cos2 = simpson(|x: f64| (std::f64::consts::FRAC_PI_2 * x / h).cos().powi(2), -h, h, 2000);
        assert!((rigid(Profile::Poly).c - poly).abs() < 1e-12);
        assert!((rigid(Profile::CosSquared).c - cos2).abs() < 1e-12);
        let fam = rigid(Profile::Poly);
        assert!((fam.c_before - 0.5 * fam.c).abs() < 1e-15);
    }

    #[test]
    fn rigid_members_rotate_by_a_times_c() {
        let fam = rigid(Profile::CosSquared);
        let alpha = AlphaHandle::golden().to_f64();
        for a in [0.0, 0.1, 0.37] {
            let f = fam.member(a).unwrap();
            for y in [0.05, 0.4, 0.93] {
                let ReturnPoint::Returned { y: v, .. } = first_return(&f, &fam.lp, y, 1e-10, 100.0) else {
                    panic!("no return")
                };
                assert!((v - y - alpha - a * fam.c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_twist_is_the_base_field() {
        let f = build_blowup(
            &AlphaHandle::golden(),
            &[CellSpec {
                seed: [0.5, 0.5],
                kind: CellKind::Backward,
                width: 0.05,
                length: 0.1,
            }],
        )
        .unwrap();
        let fam = build_twist_family(&f, &TransverseLoop::vertical(0.0), 0.15, Profile::Poly, 0.2).unwrap();
        let y0 = fam.member(0.0).unwrap();
        for y in [0.1, 0.3, 0.7] {
            assert_eq!(first_return(&y0, &fam.lp, y, 1e-9, 1e4), first_return(&f, &fam.lp, y, 1e-9, 1e4));
        }
    }

    #[test]
    fn strip_meeting_a_cell_is_rejected() {
        let f = build_blowup(
            &AlphaHandle::golden(),
            &[CellSpec {
                seed: [0.5, 0.5],
                kind: CellKind::Backward,
                width: 0.05,
                length: 0.1,
            }],
        )
        .unwrap();
        let r = build_twist_family(&f, &TransverseLoop::vertical(0.4), 0.15, Profile::Poly, 0.2);
        assert!(matches!(r, Err(TwistError::Flow(FlowError::TwistMeetsCell { cell: 0 }))));
        let r = build_twist_family(&f, &TransverseLoop::vertical(0.0), 0.15, Profile::Poly, 0.0);
        assert!(matches!(r, Err(TwistError::BadRange(_))));
    }

    #[test]
    fn rigid_closing_matches_the_closed_form() {
        let fam = rigid(Profile::CosSquared);
        let ind = induced_family(&fam, 256).unwrap();
        let res = closing_search(&fam, &ind, 0.3, 3).unwrap();
        let alpha = AlphaHandle::golden().to_f64();
        assert_eq!(res.entries.len(), 3);
        for e in &res.entries {
            let oracle = (e.p_n as f64 / e.q_n as f64 - alpha) / fam.c;
            assert!((e.a_n - oracle).abs() < 1e-8, "{}/{}: {} vs {}", e.p_n, e.q_n, e.a_n, oracle);
            assert_eq!(e.x_n, 0.3);
            assert!(e.closure_residual < 1e-8);
            assert_eq!(e.homology, (e.p_n, e.q_n));
        }
        assert!(res.a_decreasing && res.distance_nonincreasing && res.all_closed);
        // jet distance is linear in a
        for e in &res.entries {
            assert!((e.approx_cr_distance - res.jet_constant * e.a_n).abs() < 1e-9 * res.jet_constant);
            assert!((e.translated_cr_distance - e.approx_cr_distance).abs() < 1e-6 * e.approx_cr_distance);
        }
    }

    #[test]
    fn wrong_period_fails_verification() {
        let fam = rigid(Profile::CosSquared);
        let alpha = AlphaHandle::golden().to_f64();
        let a = (2.0 / 3.0 - alpha) / fam.c;
        let f = fam.member(a).unwrap();
        let ok = verify_closed_orbit(&f, 0.3, &fam.lp, 3, Some(2));
        assert!(ok.success, "{ok:?}");
        let bad = verify_closed_orbit(&f, 0.3, &fam.lp, 4, None);
        assert!(!bad.success && bad.failure.is_some());
        let wrong_winding = verify_closed_orbit(&f, 0.3, &fam.lp, 3, Some(1));
        assert!(!wrong_winding.success);
    }

    #[test]
    fn rational_rotation_is_rejected() {
        let f = build_blowup(&AlphaHandle::Rational { p: 2, q: 5 }, &[]).unwrap();
        let fam = build_twist_family(&f, &TransverseLoop::vertical(0.0), 0.15, Profile::Poly, 0.5).unwrap();
        let ind = induced_family(&fam, 128).unwrap();
        assert!(matches!(closing_search(&fam, &ind, 0.3, 3), Err(TwistError::NotRecurrent(_))));
    }
}
