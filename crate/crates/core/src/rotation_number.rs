//! Rotation numbers of non-decreasing degree-one lifts: certified estimates,
//! rational detection, parameter solving in monotone families, and
//! unimodular transforms.

use std::cmp::Ordering;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::{convergents, AlphaHandle, Convergent};
use crate::circle_map::{build_flat_spot, CircleMap, CircleMapError, MonotoneFamily, PiecewiseMonotoneCircleMap, Side};

/// Parameter bisection width.
pub const PARAM_TOL: f64 = 1e-10;
/// Residual accepted for `F^q(x) = x + p`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const GRID: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error(transparent)]
    Map(#[from] CircleMapError),
    #[error("need n ≥ 1 iterations")]
    NoIterations,
    #[error("target {p}/{q} lies outside the achievable rotation range [{lo}, {hi}] over the window")]
    TargetOutOfRange { p: i64, q: i64, lo: f64, hi: f64 },
    #[error("determinant ad − bc = {0} is not ±1")]
    BadDeterminant(i64),
    #[error("cρ + d vanishes")]
    Pole,
    #[error("q must be positive")]
    BadDenominator,
    #[error(transparent)]
    Cfrac(#[from] crate::cfrac::CfracError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalHit {
    pub p: i64,
    pub q: i64,
    /// Point where `F^q(x) − x − p` changes sign or vanishes.
    pub witness: f64,
    /// Bracket `[a, b]` with `F^q − id − p ≤ 0` at `a` and `≥ 0` at `b`.
    pub bracket: (f64, f64),
    /// `|F^q(witness) − witness − p|`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub radius: f64,
    pub rational_hit: Option<RationalHit>,
}

impl RotationEstimate {
    pub fn contains(&self, rho: f64) -> bool {
        (rho - self.value).abs() <= self.radius
    }
}

fn step<M: CircleMap + ?Sized>(map: &M, x: f64, side: Option<Side>) -> Result<f64, RotationError> {
    match side {
        Some(Side::Right) => Ok(map.lift(x)),
        _ => Ok(map.lift_sided(x, side)?),
    }
}

/// `F^n(x)` with the given side policy at jumps.
pub fn iterate<M: CircleMap + ?Sized>(
    map: &M,
    x: f64,
    n: usize,
    side: Option<Side>,
) -> Result<f64, RotationError> {
    let mut y = x;
    for _ in 0..n {
        y = step(map, y, side)?;
    }
    Ok(y)
}

/// `(F^n(x0) − x0)/n` with radius `1/n`, taking right limits at jumps.
pub fn estimate<M: CircleMap + ?Sized>(map: &M, x0: f64, n: usize) -> Result<RotationEstimate, RotationError> {
    estimate_with(map, x0, n, Some(Side::Right))
}

/// As [`estimate`]; with `side = None` an orbit landing on a jump is an error.
pub fn estimate_with<M: CircleMap + ?Sized>(
    map: &M,
    x0: f64,
    n: usize,
    side: Option<Side>,
) -> Result<RotationEstimate, RotationError> {
    if n == 0 {
        return Err(RotationError::NoIterations);
    }
    let y = iterate(map, x0, n, side)?;
    Ok(RotationEstimate {
        value: (y - x0) / n as f64,
        radius: 1.0 / n as f64,
        rational_hit: None,
    })
}

/// Grid values of `F^q(x) − x` for `q = 1..=q_max`.
fn displacement_table<M: CircleMap + ?Sized>(map: &M, q_max: usize, grid: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let xs: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let mut ys = xs.clone();
    let mut table = Vec::with_capacity(q_max);
    for _ in 0..q_max {
        for y in ys.iter_mut() {
            *y = map.lift(*y);
        }
        table.push(ys.iter().zip(&xs).map(|(y, x)| y - x).collect());
    }
    (xs, table)
}

fn bisect_witness<M: CircleMap + ?Sized>(map: &M, p: i64, q: usize, a: f64, b: f64) -> RationalHit {
    let g = |x: f64| iterate(map, x, q, Some(Side::Right)).unwrap() - x - p as f64;
    let (mut lo, mut hi) = (a, b);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 || gb == 0.0 {
        let w = if ga == 0.0 { a } else { b };
        return RationalHit { p, q: q as i64, witness: w, bracket: (a, b), residual: 0.0 };
    }
    let lo_neg = ga < 0.0;
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            lo = m;
            hi = m;
            break;
        }
        if (gm < 0.0) == lo_neg {
            lo = m;
        } else {
            hi = m;
        }
    }
    let w = 0.5 * (lo + hi);
    RationalHit {
        p,
        q: q as i64,
        witness: w,
        bracket: if lo_neg { (lo, hi) } else { (hi, lo) },
        residual: g(w).abs(),
    }
}

/// Finds `p/q` with `q ≤ q_max` such that `F^q − id − p` takes both signs
/// (or vanishes) on a grid; this forces `ρ = p/q`.
pub fn detect_rational<M: CircleMap + ?Sized>(map: &M, q_max: usize) -> Option<RationalHit> {
    let (xs, table) = displacement_table(map, q_max, GRID);
    for (qi, row) in table.iter().enumerate() {
        let q = qi + 1;
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let p_lo = lo.ceil() as i64;
        let p_hi = hi.floor() as i64;
        for p in p_lo..=p_hi {
            if (p as i128).gcd(&(q as i128)) != 1 {
                continue;
            }
            let pf = p as f64;
            // look for a grid cell where g − p changes sign
            let n = xs.len();
            for i in 0..n {
                let a = row[i] - pf;
                let j = (i + 1) % n;
                let b = row[j] - pf;
                if a == 0.0 {
                    return Some(RationalHit {
                        p,
                        q: q as i64,
                        witness: xs[i],
                        bracket: (xs[i], xs[i]),
                        residual: 0.0,
                    });
                }
                if (a < 0.0) != (b < 0.0) {
                    let xb = if j == 0 { 1.0 } else { xs[j] };
                    return Some(bisect_witness(map, p, q, xs[i], xb));
                }
            }
        }
    }
    None
}

/// Orders `ρ(F)` against `p/q` from grid values of `F^q − id − p`.
pub fn compare_rotation<M: CircleMap + ?Sized>(map: &M, p: i64, q: i64) -> Ordering {
    let q = q as usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..GRID {
        let x = i as f64 / GRID as f64;
        let g = iterate(map, x, q, Some(Side::Right)).unwrap() - x - p as f64;
        lo = lo.min(g);
        hi = hi.max(g);
        if lo <= 0.0 && hi >= 0.0 {
            return Ordering::Equal;
        }
    }
    if lo > 0.0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockingInterval {
    pub p: i64,
    pub q: i64,
    pub s_lo: f64,
    pub s_hi: f64,
    /// True when the interval shrinks to a point at the bisection tolerance.
    pub degenerate: bool,
    /// Rational detection confirmed `p/q` at both ends.
    pub confirmed: bool,
}

/// Parameter interval on which `ρ(f_ε) = p/q` inside `window`.
pub fn solve_parameter_for_rational(
    family: &MonotoneFamily,
    p: i64,
    q: i64,
    window: (f64, f64),
) -> Result<LockingInterval, RotationError> {
    if q <= 0 {
        return Err(RotationError::BadDenominator);
    }
    let (a, b) = window;
    let cmp = |e: f64| compare_rotation(&family.member(e), p, q);
    let (ca, cb) = (cmp(a), cmp(b));
    if ca == Ordering::Greater || cb == Ordering::Less {
        let lo = estimate(&family.member(a), 0.0, 2000)?.value;
        let hi = estimate(&family.member(b), 0.0, 2000)?.value;
        return Err(RotationError::TargetOutOfRange { p, q, lo, hi });
    }
    // s_lo = inf{ε : ρ ≥ p/q}
    let s_lo = if ca == Ordering::Equal {
        a
    } else {
        let (mut l, mut h) = (a, b);
        while h - l > PARAM_TOL {
            let m = 0.5 * (l + h);
            if cmp(m) == Ordering::Less {
                l = m;
            } else {
                h = m;
            }
        }
        h
    };
    // s_hi = sup{ε : ρ ≤ p/q}
    let s_hi = if cb == Ordering::Equal {
        b
    } else {
        let (mut l, mut h) = (s_lo, b);
        while h - l > PARAM_TOL {
            let m = 0.5 * (l + h);
            if cmp(m) == Ordering::Greater {
                h = m;
            } else {
                l = m;
            }
        }
        l
    };
    let degenerate = s_hi - s_lo <= 2.0 * PARAM_TOL;
    let confirmed = if degenerate {
        cmp(0.5 * (s_lo + s_hi)) == Ordering::Equal
    } else {
        cmp(s_lo) == Ordering::Equal && cmp(s_hi) == Ordering::Equal
    };
    Ok(LockingInterval {
        p,
        q,
        s_lo,
        s_hi: s_hi.max(s_lo),
        degenerate,
        confirmed,
    })
}

/// `(aρ + b)/(cρ + d)` for a unimodular integer matrix.
pub fn rotation_orbit_transform(rho: f64, a: i64, b: i64, c: i64, d: i64) -> Result<f64, RotationError> {
    let det = a * d - b * c;
    if det.abs() != 1 {
        return Err(RotationError::BadDeterminant(det));
    }
    let den = c as f64 * rho + d as f64;
    if den == 0.0 {
        return Err(RotationError::Pole);
    }
    Ok((a as f64 * rho + b as f64) / den)
}

/// Outcome of tuning a parameter so the rotation number matches a handle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedParameter {
    pub value: f64,
    /// Convergents `p/q` of the target that bracket `ρ` at `value`.
    pub lower: (i64, i64),
    pub upper: (i64, i64),
}

/// Bisects a parameter `s ↦ F_s` (ρ non-decreasing in `s`) until the
/// rotation number is pinned between two consecutive convergents of the
/// target with denominators up to `q_limit`.
///
/// A single orbit decides each comparison: `F^q(x) > x + p` forces
/// `ρ ≥ p/q` and `F^q(x) < x + p` forces `ρ ≤ p/q`.
pub fn tune_parameter<M, B>(
    build: B,
    window: (f64, f64),
    target: &AlphaHandle,
    q_limit: i64,
) -> Result<TunedParameter, RotationError>
where
    M: CircleMap,
    B: Fn(f64) -> Result<M, RotationError>,
{
    let mut depth = 2;
    let conv: Vec<Convergent> = loop {
        let c = convergents(&target.expand(depth)?);
        if c.last().map(|c| c.q as i64 >= q_limit).unwrap_or(false) || depth > 200 {
            break c;
        }
        depth += 1;
    };
    let conv: Vec<Convergent> = conv.into_iter().filter(|c| c.q as i64 <= q_limit).collect();
    let q_max = conv.last().map(|c| c.q as usize).unwrap_or(1);
    let alpha = target.to_f64();
    // Less: ρ below target; Greater: above; Equal: pinned between the two deepest convergents
    let classify = |s: f64| -> Result<(Ordering, (i64, i64), (i64, i64)), RotationError> {
        let f = build(s)?;
        let x0 = 0.0;
        let mut orbit = Vec::with_capacity(q_max + 1);
        let mut y = x0;
        orbit.push(y);
        for _ in 0..q_max {
            y = f.lift(y);
            orbit.push(y);
        }
        let mut lower = (0i64, 1i64);
        let mut upper = (1i64, 1i64);
        for c in &conv {
            let (p, q) = (c.p as i64, c.q as i64);
            let g = orbit[q as usize] - x0 - p as f64;
            let below = (p as f64) < alpha * q as f64;
            if below {
                if g < 0.0 {
                    return Ok((Ordering::Less, lower, (p, q)));
                }
                lower = (p, q);
            } else {
                if g > 0.0 {
                    return Ok((Ordering::Greater, (p, q), upper));
                }
                upper = (p, q);
            }
        }
        Ok((Ordering::Equal, lower, upper))
    };
    let (mut lo, mut hi) = window;
    let (c_lo, ..) = classify(lo)?;
    let (c_hi, ..) = classify(hi)?;
    if c_lo == Ordering::Greater || c_hi == Ordering::Less {
        return Err(RotationError::TargetOutOfRange {
            p: (alpha * 1e6).round() as i64,
            q: 1_000_000,
            lo,
            hi,
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let (c, lower, upper) = classify(m)?;
        match c {
            Ordering::Less => lo = m,
            Ordering::Greater => hi = m,
            Ordering::Equal => {
                return Ok(TunedParameter { value: m, lower, upper });
            }
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let m = 0.5 * (lo + hi);
    let (_, lower, upper) = classify(m)?;
    Ok(TunedParameter { value: m, lower, upper })
}

/// Flat-spot map whose plateau value is tuned so that `ρ` sits between
/// consecutive convergents of `alpha` with denominators near `q_limit`; the
/// map carries `alpha` as its handle.
pub fn build_flat_spot_with_rotation(
    alpha: &AlphaHandle,
    width: f64,
    b: f64,
    q_limit: i64,
) -> Result<PiecewiseMonotoneCircleMap, RotationError> {
    let t = tune_parameter(
        |w| build_flat_spot(w, width, b).map_err(RotationError::from),
        (0.0, 1.0),
        alpha,
        q_limit,
    )?;
    Ok(build_flat_spot(t.value, width, b)?.with_handle(alpha.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::*;
    use std::sync::Arc;

    #[test]
    fn rigid_rotation_estimate() {
        let r = build_rotation(0.3);
        let e = estimate(&r, 0.17, 100).unwrap();
        assert!((e.value - 0.3).abs() < 1e-12);
        assert_eq!(e.radius, 0.01);
    }

    #[test]
    fn detects_one_third() {
        let r = build_rotation(1.0 / 3.0);
        let hit = detect_rational(&r, 10).unwrap();
        assert_eq!((hit.p, hit.q), (1, 3));
        assert!(hit.residual < 1e-10);
        let g = build_rotation(AlphaHandle::golden().to_f64());
        assert!(detect_rational(&g, 50).is_none());
    }

    #[test]
    fn strict_side_policy_errors_at_jump() {
        let m = build_flat_spot(0.2, 0.1, 0.0).unwrap().inverse().unwrap();
        let at = m.jumps()[0].at;
        assert!(estimate_with(&m, at, 3, None).is_err());
        assert!(estimate(&m, at, 3).is_ok());
    }

    #[test]
    fn rigid_family_locks_at_a_point() {
        let base: Arc<dyn CircleMap> = Arc::new(build_rotation(0.3));
        let fam = MonotoneFamily::new(base, Homeo::Rotation, (0.0, 0.2), 0.0).unwrap();
        let li = solve_parameter_for_rational(&fam, 1, 3, (0.0, 0.2)).unwrap();
        assert!(li.degenerate);
        assert!((li.s_lo - (1.0 / 3.0 - 0.3)).abs() < 1e-9);
        let err = solve_parameter_for_rational(&fam, 1, 4, (0.0, 0.2)).unwrap_err();
        assert!(matches!(err, RotationError::TargetOutOfRange { .. }));
    }

    #[test]
    fn transforms() {
        let g = AlphaHandle::golden().to_f64();
        assert_eq!(rotation_orbit_transform(g, 1, 0, 0, 1).unwrap(), g);
        assert!((rotation_orbit_transform(g, 1, 1, 0, 1).unwrap() - (g + 1.0)).abs() < 1e-15);
        assert!((rotation_orbit_transform(g, 0, 1, 1, 0).unwrap() - (g + 1.0)).abs() < 1e-14);
        assert!(matches!(
            rotation_orbit_transform(g, 2, 0, 0, 1),
            Err(RotationError::BadDeterminant(2))
        ));
    }

    #[test]
    fn tuning_a_flat_spot_map_to_golden() {
        let target = AlphaHandle::golden();
        let t = tune_parameter(
            |w| build_flat_spot(w, 0.02, 0.3).map_err(RotationError::from),
            (0.0, 1.0),
            &target,
            2000,
        )
        .unwrap();
        let m = build_flat_spot(t.value, 0.02, 0.3).unwrap();
        let e = estimate(&m, 0.0, 20000).unwrap();
        assert!((e.value - target.to_f64()).abs() < 1e-3);
        assert!(t.lower.1 >= 500 || t.upper.1 >= 500, "{t:?}");
    }
}
