//! Wandering intervals: horizon-bounded disjointness scans, the
//! semiconjugacy to the rigid rotation, distortion along orbits, and the
//! forward/backward dichotomy experiment.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::AlphaHandle;
use crate::closest_returns::{intersection_multiplicity, ArcInterval};
use crate::circle_map::{
    frac, variation_log_derivative, CircleMap, CircleMapError, GapMeasure, PiecewiseMonotoneCircleMap, Provenance,
};
use crate::rotation_number::detect_rational;

pub const DEFAULT_HORIZON: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WanderingError {
    #[error(transparent)]
    Map(#[from] CircleMapError),
    #[error("interval is degenerate")]
    Degenerate,
    #[error("rotation number is rational ({p}/{q}); no semiconjugacy to an irrational rotation")]
    Rational { p: i64, q: i64 },
    #[error("map carries no rotation handle")]
    NoHandle,
    #[error("handle {0} is not of bounded type")]
    NotBoundedType(String),
    #[error("variation of log Df is not certified finite (estimates {0:?})")]
    InfiniteVariation(Vec<f64>),
    #[error("no samples left outside plateaus")]
    NoSamples,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
    TwoSided,
}

/// Why a scan stopped before the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanStop {
    /// Iterate `index` meets iterate `other` (negative indices are preimages).
    Overlap { index: i64, other: i64 },
    /// Forward image is a point: the interval fell into a plateau.
    PlateauCollapse { index: i64 },
    /// Preimage is empty or a point: the interval lies in a jump gap.
    EmptyPreimage { index: i64 },
    /// An iterate covers the whole circle.
    Covers { index: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WanderingReport {
    pub interval: ArcInterval,
    pub direction: Direction,
    pub horizon: usize,
    pub disjoint_up_to: usize,
    pub min_length_seen: f64,
    pub limit_periodic: bool,
    pub stop: Option<ScanStop>,
    /// `disjoint_up_to == horizon`, no stop, not limit-periodic.
    pub wandering: bool,
    /// Iterate lengths by index `0, 1, ...` (preimages for backward scans).
    pub forward_lengths: Vec<f64>,
    pub backward_lengths: Vec<f64>,
    /// Largest distance between an iterate's ends and the stored gap it
    /// should land on, for gap-measure maps scanned from a gap.
    pub endpoint_drift: Option<f64>,
}

impl WanderingReport {
    /// `k,length` rows; backward iterates get negative `k`.
    pub fn lengths_csv(&self) -> String {
        let mut s = String::from("k,length\n");
        for (i, l) in self.backward_lengths.iter().enumerate().rev() {
            if i > 0 {
                s.push_str(&format!("-{i},{l:e}\n"));
            }
        }
        for (i, l) in self.forward_lengths.iter().enumerate() {
            s.push_str(&format!("{i},{l:e}\n"));
        }
        s
    }
}

/// Pairwise-disjointness bookkeeping for closed arcs on the circle.
struct ArcSet {
    // (start, end, label) with 0 ≤ start ≤ end ≤ 1, sorted by start
    arcs: Vec<(f64, f64, i64)>,
}

impl ArcSet {
    fn new() -> Self {
        ArcSet { arcs: Vec::new() }
    }

    fn pieces(a: &ArcInterval) -> Vec<(f64, f64)> {
        let s = frac(a.start);
        let e = s + a.length;
        if e <= 1.0 {
            vec![(s, e)]
        } else {
            vec![(s, 1.0), (0.0, e - 1.0)]
        }
    }

    fn hit(&self, s: f64, e: f64) -> Option<i64> {
        let i = self.arcs.partition_point(|a| a.0 < s);
        for j in [i.wrapping_sub(1), i] {
            if let Some(&(s2, e2, lab)) = self.arcs.get(j) {
                if s <= e2 && s2 <= e {
                    return Some(lab);
                }
            }
        }
        // a long earlier arc can reach past its immediate neighbour
        self.arcs[..i.min(self.arcs.len())]
            .iter()
            .rev()
            .take(4)
            .find(|a| a.1 >= s)
            .map(|a| a.2)
    }

    /// Inserts the arc unless it meets one already present; returns the label hit.
    fn insert(&mut self, a: &ArcInterval, label: i64) -> Option<i64> {
        let ps = Self::pieces(a);
        for &(s, e) in &ps {
            if let Some(l) = self.hit(s, e) {
                return Some(l);
            }
        }
        for (s, e) in ps {
            let i = self.arcs.partition_point(|x| x.0 < s);
            self.arcs.insert(i, (s, e, label));
        }
        None
    }
}

/// Hull of `F(I)`: `[F(a), F(b⁻)]`.
pub fn forward_image<M: CircleMap + ?Sized>(map: &M, a: &ArcInterval) -> ArcInterval {
    let s = map.lift(a.start);
    let e = map.lift_left(a.start + a.length).max(s);
    ArcInterval::closed(s, e - s)
}

/// Maximal interval mapped into `I`; `None` when it is empty or a point.
pub fn preimage_interval<M: CircleMap + ?Sized>(map: &M, a: &ArcInterval) -> Option<ArcInterval> {
    let (lo, _) = map.preimage(a.start);
    let (_, hi) = map.preimage(a.start + a.length);
    // a preimage of a few ulps is the jump point itself
    if hi - lo > 1e-13 {
        Some(ArcInterval::closed(lo, hi - lo))
    } else {
        None
    }
}

fn rational_rotation<M: CircleMap + ?Sized>(map: &M) -> Option<(i64, i64)> {
    if let Some(h) = map.rotation_handle() {
        if h.is_rational() {
            let cf = h.expand(64).ok()?;
            let c = crate::cfrac::convergents(&cf);
            let last = c.last()?;
            return Some((last.p as i64, last.q as i64));
        }
        return None;
    }
    detect_rational(map, 64).map(|r| (r.p, r.q))
}

fn gap_of(map: &dyn CircleMap, a: &ArcInterval) -> Option<(Arc<GapMeasure>, usize, i64, bool)> {
    let t = map.as_table()?;
    let (gm, inverted) = match t.provenance() {
        Provenance::GapMeasure(g) => (g.clone(), false),
        Provenance::Inverse(p) => match p.as_ref() {
            Provenance::GapMeasure(g) => (g.clone(), true),
            _ => return None,
        },
        _ => return None,
    };
    let atom = gm
        .atoms()
        .iter()
        .find(|at| (frac(a.start) - at.x0).abs() < 1e-15 && (a.length - at.mass).abs() < 1e-15)?;
    Some((gm.clone(), atom.orbit, atom.k, inverted))
}

fn drift(gm: &GapMeasure, orbit: usize, k: i64, it: &ArcInterval) -> Option<f64> {
    let g = gm.gap(orbit, k)?;
    let ds = (frac(it.start) - g.start).abs();
    let ds = ds.min(1.0 - ds);
    Some(ds.max((it.length - g.length).abs()))
}

/// Scans `f^k(I)` for `0 ≤ k ≤ N` (forward), `f^{-k}(I)` (backward) or
/// both, stopping at the first overlap or collapse.
pub fn scan_wandering(
    map: &dyn CircleMap,
    interval: &ArcInterval,
    direction: Direction,
    horizon: usize,
) -> Result<WanderingReport, WanderingError> {
    if !(interval.length > 0.0) {
        return Err(WanderingError::Degenerate);
    }
    let limit_periodic = rational_rotation(map).is_some();
    let gap = gap_of(map, interval);
    let mut set = ArcSet::new();
    set.insert(interval, 0);
    let mut fwd = vec![interval.length];
    let mut bwd = vec![interval.length];
    let mut stop = None;
    let mut max_drift: Option<f64> = gap.as_ref().map(|_| 0.0);
    let mut fcur = *interval;
    let mut bcur = *interval;
    let do_f = direction != Direction::Backward;
    let do_b = direction != Direction::Forward;
    let mut reached = 0;
    for k in 1..=horizon {
        if do_f {
            let next = forward_image(map, &fcur);
            if next.length <= 0.0 {
                stop = Some(ScanStop::PlateauCollapse { index: k as i64 });
                break;
            }
            if next.length >= 1.0 {
                stop = Some(ScanStop::Covers { index: k as i64 });
                break;
            }
            if let Some(other) = set.insert(&next, k as i64) {
                stop = Some(ScanStop::Overlap { index: k as i64, other });
                break;
            }
            if let Some((gm, orbit, k0, inv)) = &gap {
                let kk = if *inv { k0 - k as i64 } else { k0 + k as i64 };
                if let (Some(d), Some(m)) = (drift(gm, *orbit, kk, &next), max_drift.as_mut()) {
                    *m = m.max(d);
                }
            }
            fwd.push(next.length);
            fcur = next;
        }
        if do_b {
            let Some(prev) = preimage_interval(map, &bcur) else {
                stop = Some(ScanStop::EmptyPreimage { index: -(k as i64) });
                break;
            };
            if prev.length >= 1.0 {
                stop = Some(ScanStop::Covers { index: -(k as i64) });
                break;
            }
            if let Some(other) = set.insert(&prev, -(k as i64)) {
                stop = Some(ScanStop::Overlap { index: -(k as i64), other });
                break;
            }
            if let Some((gm, orbit, k0, inv)) = &gap {
                let kk = if *inv { k0 + k as i64 } else { k0 - k as i64 };
                if let (Some(d), Some(m)) = (drift(gm, *orbit, kk, &prev), max_drift.as_mut()) {
                    *m = m.max(d);
                }
            }
            bwd.push(prev.length);
            bcur = prev;
        }
        reached = k;
    }
    let min_length_seen = fwd.iter().chain(bwd.iter()).copied().fold(f64::INFINITY, f64::min);
    Ok(WanderingReport {
        interval: *interval,
        direction,
        horizon,
        disjoint_up_to: reached,
        min_length_seen,
        limit_periodic,
        wandering: stop.is_none() && reached == horizon && !limit_periodic,
        stop,
        forward_lengths: fwd,
        backward_lengths: bwd,
        endpoint_drift: max_drift,
    })
}

/// An arc collapsed by `h` to one angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapsed {
    pub arc: ArcInterval,
    pub point: f64,
}

#[derive(Clone, Debug)]
enum HRepr {
    Identity,
    Gap(Arc<GapMeasure>),
    Knots { x: Vec<f64>, theta: Vec<f64> },
}

/// Monotone degree-one `h` with `h ∘ f = R_α ∘ h`.
#[derive(Clone, Debug)]
pub struct Semiconjugacy {
    pub alpha: f64,
    pub collapsed: Vec<Collapsed>,
    /// `sup |h(f(x)) − h(x) − α|` (circle distance) on the check grid.
    pub residual: f64,
    pub resolution: f64,
    /// `h` is non-decreasing on the check grid.
    pub monotone: bool,
    /// Built from the invariant gap measure rather than an orbit.
    pub exact: bool,
    repr: HRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiconjugacySummary {
    pub alpha: f64,
    pub residual: f64,
    pub resolution: f64,
    pub monotone: bool,
    pub exact: bool,
    pub collapsed_count: usize,
    pub collapsed_sample: Vec<Collapsed>,
}

impl Semiconjugacy {
    /// `h` on the lift.
    pub fn h(&self, x: f64) -> f64 {
        match &self.repr {
            HRepr::Identity => x,
            HRepr::Gap(g) => g.angle(x),
            HRepr::Knots { x: xs, theta } => {
                let n = x.floor();
                let f = x - n;
                let i = xs.partition_point(|&k| k <= f);
                let m = xs.len();
                let (x0, t0) = if i == 0 { (xs[m - 1] - 1.0, theta[m - 1] - 1.0) } else { (xs[i - 1], theta[i - 1]) };
                let (x1, t1) = if i == m { (xs[0] + 1.0, theta[0] + 1.0) } else { (xs[i], theta[i]) };
                let t = if x1 > x0 { (f - x0) / (x1 - x0) } else { 0.0 };
                t0 + t * (t1 - t0) + n
            }
        }
    }

    pub fn summary(&self, sample: usize) -> SemiconjugacySummary {
        SemiconjugacySummary {
            alpha: self.alpha,
            residual: self.residual,
            resolution: self.resolution,
            monotone: self.monotone,
            exact: self.exact,
            collapsed_count: self.collapsed.len(),
            collapsed_sample: self.collapsed.iter().take(sample).copied().collect(),
        }
    }
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

const CHECK_GRID: usize = 10_000;

/// Semiconjugacy to `R_α` for a map with irrational rotation number.
///
/// Gap-measure maps (and their inverses) get `h = G⁻¹` exactly; other maps
/// get `h` by ordering an orbit of length about `1/resolution`.
pub fn compute_semiconjugacy(map: &dyn CircleMap, resolution: f64) -> Result<Semiconjugacy, WanderingError> {
    if let Some((p, q)) = rational_rotation(map) {
        return Err(WanderingError::Rational { p, q });
    }
    let handle = map.rotation_handle();
    let table = map.as_table();
    let prov = table.map(|t| t.provenance().clone());
    let (alpha, repr, collapsed, exact) = match prov {
        Some(Provenance::Rotation) => (frac(map.lift(0.0)), HRepr::Identity, Vec::new(), true),
        Some(Provenance::GapMeasure(g)) => {
            let c = gap_collapsed(&g);
            (g.alpha, HRepr::Gap(g), c, true)
        }
        Some(Provenance::Inverse(p)) if matches!(p.as_ref(), Provenance::GapMeasure(_)) => {
            let Provenance::GapMeasure(g) = p.as_ref() else { unreachable!() };
            let c = gap_collapsed(g);
            (frac(-g.alpha), HRepr::Gap(g.clone()), c, true)
        }
        _ => {
            let alpha = match &handle {
                Some(h) => frac(h.to_f64()),
                None => {
                    let n = 1_000_000;
                    crate::rotation_number::estimate(map, 0.0, n)
                        .map_err(|e| WanderingError::Map(CircleMapError::Other(e.to_string())))?
                        .value
                }
            };
            let (repr, c) = orbit_h(map, alpha, resolution);
            (frac(alpha), repr, c, false)
        }
    };
    let mut s = Semiconjugacy {
        alpha,
        collapsed,
        residual: 0.0,
        resolution,
        monotone: true,
        exact,
        repr,
    };
    let mut prev = f64::NEG_INFINITY;
    let mut res: f64 = 0.0;
    for i in 0..CHECK_GRID {
        let x = i as f64 / CHECK_GRID as f64;
        let hx = s.h(x);
        if hx < prev - 1e-15 {
            s.monotone = false;
        }
        prev = hx;
        res = res.max(circle_dist(s.h(map.lift(x)), hx + alpha));
    }
    s.residual = res;
    Ok(s)
}

fn gap_collapsed(g: &GapMeasure) -> Vec<Collapsed> {
    g.atoms()
        .iter()
        .map(|a| Collapsed {
            arc: ArcInterval::closed(a.x0, a.mass),
            point: a.theta,
        })
        .collect()
}

fn orbit_knots(map: &dyn CircleMap, alpha: f64, m: usize) -> (Vec<f64>, Vec<f64>, Vec<Collapsed>, bool) {
    let mut collapsed = Vec::new();
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(m + 128);
    let plateaus = map.plateaus();
    let jumps = map.jumps();
    let x0 = if let Some(p) = plateaus.first() {
        map.lift(p.start)
    } else if let Some(j) = jumps.first() {
        0.5 * (j.left + j.right)
    } else {
        0.0
    };
    let mut y = x0;
    for k in 0..m {
        knots.push((frac(y), k as f64 * alpha));
        y = map.lift(y);
    }
    let depth = 64.min(m);
    // the plateau and its preimages sit one step and more before the orbit start
    if let Some(p) = plateaus.first() {
        let mut arc = *p;
        for j in 1..=depth {
            let th = -(j as f64) * alpha;
            collapsed.push(Collapsed { arc, point: frac(th) });
            knots.push((frac(arc.start), th));
            knots.push((frac(arc.start) + arc.length, th));
            match preimage_interval(map, &arc) {
                Some(a) => arc = a,
                None => break,
            }
        }
    } else if let Some(j) = jumps.first() {
        let mut arc = j.gap_arc();
        for k in 0..depth {
            let th = k as f64 * alpha;
            collapsed.push(Collapsed { arc, point: frac(th) });
            knots.push((frac(arc.start), th));
            knots.push((frac(arc.start) + arc.length, th));
            arc = forward_image(map, &arc);
        }
    }
    for k in knots.iter_mut() {
        k.1 = frac(k.1);
        if k.0 >= 1.0 {
            k.0 -= 1.0;
        }
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // lift the angles so that they increase through one turn
    let t0 = knots[0].1;
    let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
    let theta: Vec<f64> = knots
        .iter()
        .map(|k| {
            let d = frac(k.1 - t0);
            t0 + if d > 1.0 - 1e-12 { 0.0 } else { d }
        })
        .collect();
    let monotone = theta.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    (xs, theta, collapsed, monotone)
}

/// Orbit-ordered `h`: the orbit length is halved until the orbit order
/// agrees with the order of `kα`.
fn orbit_h(map: &dyn CircleMap, alpha: f64, resolution: f64) -> (HRepr, Vec<Collapsed>) {
    let mut m = ((1.0 / resolution) as usize).clamp(1000, 2_000_000);
    loop {
        let (x, theta, c, ok) = orbit_knots(map, alpha, m);
        if ok || m <= 64 {
            return (HRepr::Knots { x, theta }, c);
        }
        m /= 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    #[serde(rename = "K")]
    pub k_bound: u64,
    #[serde(rename = "V")]
    pub v: f64,
    /// `2(K+1)V`; `beta = exp(log_beta)` may overflow.
    pub log_beta: f64,
    pub beta: f64,
    pub observed_max_ratio: f64,
    pub observed_max_log_ratio: f64,
    pub k_used: usize,
    pub witness: (f64, f64),
    pub samples: usize,
    /// Samples dropped because some iterate sat in a plateau.
    pub excluded: usize,
    /// Intersection multiplicity of `T, f(T), …, f^{k−1}(T)`.
    pub multiplicity: usize,
    /// `multiplicity ≤ 2(K+1)`.
    pub hypothesis_met: bool,
    /// `multiplicity · V`, the bound the variation argument gives directly.
    pub sharp_log_bound: f64,
    pub passed: bool,
}

/// `Σ_{i<k} log Df(f^i(x))`, or `None` if some factor vanishes.
pub fn log_derivative_sum<M: CircleMap + ?Sized>(map: &M, x: f64, k: usize) -> Option<f64> {
    let mut y = x;
    let mut s = 0.0;
    for _ in 0..k {
        let d = map.derivative(y);
        if !(d > 0.0) {
            return None;
        }
        s += d.ln();
        y = map.lift(y);
    }
    Some(s)
}

fn handle_k(map: &dyn CircleMap) -> Result<(AlphaHandle, u64), WanderingError> {
    let h = map.rotation_handle().ok_or(WanderingError::NoHandle)?;
    let k = h
        .bounded_type()
        .map(|q| q.max_quotient())
        .ok_or_else(|| WanderingError::NotBoundedType(h.label()))?;
    Ok((h, k))
}

/// Samples pairs in `T` and compares `log Df^k(y) − log Df^k(x)` with
/// `2(K+1)V`, `K` the largest quotient of the handle.
pub fn distortion_check(
    map: &dyn CircleMap,
    t: &ArcInterval,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<DistortionReport, WanderingError> {
    let (_, kq) = handle_k(map)?;
    let var = variation_log_derivative(map)?;
    let v = var.v;
    let log_beta = 2.0 * (kq as f64 + 1.0) * v;
    let mut arcs = Vec::with_capacity(k);
    let mut cur = *t;
    for _ in 0..k {
        arcs.push(cur);
        cur = forward_image(map, &cur);
    }
    let multiplicity = intersection_multiplicity(&arcs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0f64, (t.start, t.start));
    let mut excluded = 0;
    let mut used = 0;
    for _ in 0..samples {
        let x = t.start + rng.gen::<f64>() * t.length;
        let y = t.start + rng.gen::<f64>() * t.length;
        match (log_derivative_sum(map, x, k), log_derivative_sum(map, y, k)) {
            (Some(a), Some(b)) => {
                used += 1;
                let r = (b - a).abs();
                if r > best.0 {
                    best = (r, (x, y));
                }
            }
            _ => excluded += 1,
        }
    }
    if used == 0 {
        return Err(WanderingError::NoSamples);
    }
    Ok(DistortionReport {
        k_bound: kq,
        v,
        log_beta,
        beta: log_beta.exp(),
        observed_max_ratio: best.0.exp(),
        observed_max_log_ratio: best.0,
        k_used: k,
        witness: best.1,
        samples: used,
        excluded,
        multiplicity,
        hypothesis_met: multiplicity as u64 <= 2 * (kq + 1),
        sharp_log_bound: multiplicity as f64 * v,
        passed: best.0 <= log_beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maximality {
    /// The candidate is a whole plateau, jump gap or inserted gap.
    GapArc,
    /// Strictly inside such an arc.
    InsideGap,
    Unknown,
}

fn known_gaps(map: &dyn CircleMap) -> Vec<ArcInterval> {
    let mut out = map.plateaus();
    out.extend(map.jumps().iter().map(|j| j.gap_arc()));
    if let Some(t) = map.as_table() {
        if let Some(g) = t.gap_measure() {
            out.extend(g.atoms().iter().take(64).map(|a| ArcInterval::closed(a.x0, a.mass)));
        }
    }
    out
}

pub fn maximality(map: &dyn CircleMap, c: &ArcInterval) -> Maximality {
    for g in known_gaps(map) {
        let d = circle_dist(g.start, c.start);
        if d < 1e-12 && (g.length - c.length).abs() < 1e-12 {
            return Maximality::GapArc;
        }
        let off = frac(c.start - g.start);
        if off + c.length <= g.length + 1e-12 {
            return Maximality::InsideGap;
        }
    }
    Maximality::Unknown
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyInequality {
    /// Backward iterates checked.
    pub checked: usize,
    /// `min_m log(|f^{-m}(I_−)| β / |I_+|)`; non-negative when the inequality holds.
    pub min_log_slack: f64,
    pub worst_m: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremAReport {
    pub forward: WanderingReport,
    pub backward: WanderingReport,
    pub forward_maximality: Maximality,
    pub backward_maximality: Maximality,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "K")]
    pub k_bound: u64,
    pub log_beta: f64,
    /// Which scan stopped first: `forward`, `backward`, or `none`.
    pub first_failure: String,
    /// Both candidates survive the horizon without overlaps or collapses.
    pub both_survive: bool,
    pub key_inequality: KeyInequality,
}

/// Runs the forward scan of `I_+` and the backward scan of `I_−` and checks
/// `|f^{-m}(I_−)| ≥ |I_+|/β` on the backward data obtained.
pub fn theorem_a_experiment(
    map: &dyn CircleMap,
    forward: &ArcInterval,
    backward: &ArcInterval,
    horizon: usize,
) -> Result<TheoremAReport, WanderingError> {
    let (_, kq) = handle_k(map)?;
    let var = variation_log_derivative(map)?;
    if !var.finite {
        return Err(WanderingError::InfiniteVariation(var.estimates));
    }
    let log_beta = 2.0 * (kq as f64 + 1.0) * var.v;
    let (f, b) = rayon::join(
        || scan_wandering(map, forward, Direction::Forward, horizon),
        || scan_wandering(map, backward, Direction::Backward, horizon),
    );
    let (f, b) = (f?, b?);
    let first_failure = match (f.wandering, b.wandering) {
        (true, true) => "none",
        (false, true) => "forward",
        (true, false) => "backward",
        (false, false) => {
            if f.disjoint_up_to <= b.disjoint_up_to {
                "forward"
            } else {
                "backward"
            }
        }
    }
    .to_string();
    let ip = forward.length.ln();
    let mut key = KeyInequality {
        checked: 0,
        min_log_slack: f64::INFINITY,
        worst_m: 0,
        holds: true,
    };
    for (m, l) in b.backward_lengths.iter().enumerate().skip(1) {
        let slack = l.ln() + log_beta - ip;
        key.checked += 1;
        if slack < key.min_log_slack {
            key.min_log_slack = slack;
            key.worst_m = m;
        }
    }
    key.holds = key.min_log_slack >= 0.0;
    Ok(TheoremAReport {
        forward_maximality: maximality(map, forward),
        backward_maximality: maximality(map, backward),
        both_survive: f.wandering && b.wandering,
        forward: f,
        backward: b,
        v: var.v,
        k_bound: kq,
        log_beta,
        first_failure,
        key_inequality: key,
    })
}

/// Natural candidate: the longest plateau or jump gap, else the inserted
/// gap with index 0.
pub fn default_candidate(map: &PiecewiseMonotoneCircleMap) -> Option<ArcInterval> {
    map.plateaus()
        .into_iter()
        .chain(map.jumps().iter().map(|j| j.gap_arc()))
        .chain(map.gap_measure().and_then(|g| g.gap(0, 0)))
        .max_by(|a, b| a.length.total_cmp(&b.length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::*;
    use crate::rotation_number::build_flat_spot_with_rotation;

    fn golden() -> AlphaHandle {
        AlphaHandle::golden()
    }

    #[test]
    fn rational_rotation_is_limit_periodic() {
        let r = build_rotation(1.0 / 3.0);
        let rep = scan_wandering(&r, &ArcInterval::closed(0.1, 0.05), Direction::Forward, 100).unwrap();
        assert!(rep.limit_periodic && !rep.wandering);
        assert_eq!(rep.disjoint_up_to, 2);
    }

    #[test]
    fn denjoy_gap_wanders_both_ways() {
        let m = build_denjoy(&golden(), GapWeights::inverse_square(0.5), 0.0, None).unwrap();
        let g = m.gap_measure().unwrap().gap(0, 0).unwrap();
        let rep = scan_wandering(&m, &g, Direction::TwoSided, 1000).unwrap();
        assert!(rep.wandering, "{:?}", rep.stop);
        assert_eq!(rep.disjoint_up_to, 1000);
        assert!(rep.endpoint_drift.unwrap() < 1e-12, "{:?}", rep.endpoint_drift);
    }

    #[test]
    fn plateau_forward_collapses() {
        let m = build_cherry_return(&golden(), &[OrbitGapSpec { seed: 0.1, mass: 0.3 }], None).unwrap();
        let p = default_candidate(&m).unwrap();
        let f = scan_wandering(&m, &p, Direction::Forward, 1000).unwrap();
        assert_eq!(f.stop, Some(ScanStop::PlateauCollapse { index: 1 }));
        let b = scan_wandering(&m, &p, Direction::Backward, 1000).unwrap();
        assert!(b.wandering, "{:?}", b.stop);
    }

    #[test]
    fn jump_gap_backward_is_empty() {
        let m = build_jump_return(&golden(), &[OrbitGapSpec { seed: 0.2, mass: 0.3 }], None).unwrap();
        let g = default_candidate(&m).unwrap();
        let b = scan_wandering(&m, &g, Direction::Backward, 1000).unwrap();
        assert_eq!(b.stop, Some(ScanStop::EmptyPreimage { index: -1 }));
        let f = scan_wandering(&m, &g, Direction::Forward, 1000).unwrap();
        assert!(f.wandering, "{:?}", f.stop);
    }

    #[test]
    fn truncated_denjoy_candidate_is_the_inserted_gap() {
        let m = build_denjoy(&golden(), GapWeights::inverse_square(0.3), 0.0, Some(512)).unwrap();
        let c = default_candidate(&m).unwrap();
        let g = m.gap_measure().unwrap().gap(0, 0).unwrap();
        assert_eq!(c, g);
        assert!(distortion_check(&m, &c, 50, 100, 1).unwrap().passed);
    }

    #[test]
    fn semiconjugacy_of_rotation_and_denjoy() {
        let r = build_rotation_handle(&golden());
        let s = compute_semiconjugacy(&r, 1e-6).unwrap();
        assert_eq!(s.residual, 0.0);
        assert!(s.h(0.3) == 0.3);
        let m = build_denjoy(&golden(), GapWeights::inverse_square(0.5), 0.0, None).unwrap();
        let s = compute_semiconjugacy(&m, 1e-6).unwrap();
        assert!(s.residual < 1e-6 && s.monotone && s.exact, "{}", s.residual);
        let g = m.gap_measure().unwrap().gap(0, 3).unwrap();
        assert_eq!(s.h(g.start), s.h(g.start + g.length));
        assert!(matches!(
            compute_semiconjugacy(&build_rotation(1.0 / 3.0), 1e-6),
            Err(WanderingError::Rational { p: 1, q: 3 })
        ));
    }

    #[test]
    fn semiconjugacy_of_a_flat_spot_map() {
        let m = build_flat_spot_with_rotation(&golden(), 0.05, 0.3, 1_000_000).unwrap();
        let s = compute_semiconjugacy(&m, 1e-5).unwrap();
        assert!(s.monotone);
        assert!(s.residual < 1e-2, "{}", s.residual);
        let p = m.plateaus()[0];
        assert!((s.h(p.start + 0.1 * p.length) - s.h(p.start + 0.9 * p.length)).abs() < 1e-12);
    }

    #[test]
    fn rotation_has_no_distortion() {
        let r = build_rotation_handle(&golden());
        let d = distortion_check(&r, &ArcInterval::closed(0.1, 0.2), 50, 100, 1).unwrap();
        assert_eq!(d.observed_max_ratio, 1.0);
        assert!(d.passed);
    }

    #[test]
    fn telescoping_matches_product() {
        let m = build_denjoy(&golden(), GapWeights::inverse_square(0.5), 0.0, None).unwrap();
        let x = 0.4;
        let s = log_derivative_sum(&m, x, 1000).unwrap();
        let mut y = x;
        let mut prod = 1.0;
        for _ in 0..1000 {
            prod *= m.derivative(y);
            y = m.lift(y);
        }
        assert!((s - prod.ln()).abs() < 1e-8);
    }

    #[test]
    fn dichotomy_on_plateau_map() {
        let m = build_flat_spot_with_rotation(&golden(), 0.05, 0.3, 5000).unwrap();
        let c = default_candidate(&m).unwrap();
        let rep = theorem_a_experiment(&m, &c, &c, 1000).unwrap();
        assert!(!rep.both_survive);
        assert_eq!(rep.first_failure, "forward");
        assert_eq!(rep.forward_maximality, Maximality::GapArc);
    }

    #[test]
    fn refuses_infinite_variation() {
        // a map without a handle is refused before anything else
        let m = build_flat_spot(0.3, 0.05, 0.5).unwrap();
        let c = ArcInterval::closed(0.0, 0.05);
        assert!(matches!(
            theorem_a_experiment(&m, &c, &c, 10),
            Err(WanderingError::NoHandle)
        ));
    }
}
