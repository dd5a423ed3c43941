//! First returns to a transverse loop and the sampled return map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{build_blowup_with_slope, CellSpec, FieldProvenance, SingularityKind, TorusVectorField};
use super::integrate::{Outcome, Tracer, DEFAULT_BUDGET, DEFAULT_TOL};
use super::loops::{Deflection, TransverseLoop};
use super::FlowError;
use crate::cfrac::AlphaHandle;
use crate::circle_map::{CircleMapError, Piece, PiecewiseMonotoneCircleMap, Provenance};
use crate::rotation_number::{tune_parameter, RotationError, TunedParameter};

pub const DEFAULT_RESOLUTION: usize = 1024;
/// Largest gap between a sampled chord and the flow at its midpoint.
pub const MAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnOptions {
    pub resolution: usize,
    /// Integrator tolerance.
    pub tol: f64,
    /// Flow time allowed per return.
    pub budget: f64,
    pub map_tol: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions {
            resolution: DEFAULT_RESOLUTION,
            tol: DEFAULT_TOL,
            budget: DEFAULT_BUDGET,
            map_tol: MAP_TOL,
        }
    }
}

impl ReturnOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        ReturnOptions {
            resolution,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnPoint {
    /// Lifted loop parameter of the first return.
    Returned { y: f64, time: f64 },
    Captured { singularity: usize, time: f64 },
    /// Stuck at a saddle (on a stable separatrix).
    Stalled { singularity: usize },
    Unresolved,
}

impl ReturnPoint {
    fn value(&self) -> Option<f64> {
        match self {
            ReturnPoint::Returned { y, .. } => Some(*y),
            _ => None,
        }
    }
}

/// Flows the loop point with parameter `y` to its next crossing of the loop.
pub fn first_return(field: &TorusVectorField, lp: &TransverseLoop, y: f64, tol: f64, budget: f64) -> ReturnPoint {
    let mut tr = Tracer::new(field);
    tr.section = Some(lp);
    tr.tol = tol;
    tr.max_crossings = Some(1);
    let seg = tr.run([lp.x0 + lp.g(y), y], budget);
    match seg.outcome {
        Outcome::Crossings => ReturnPoint::Returned {
            y: seg.crossings[0].y,
            time: seg.t_end,
        },
        Outcome::Captured { singularity } => ReturnPoint::Captured {
            singularity,
            time: seg.t_end,
        },
        Outcome::NearSingularity { singularity, .. } => ReturnPoint::Stalled { singularity },
        Outcome::Completed | Outcome::StepUnderflow => ReturnPoint::Unresolved,
    }
}

/// Arc of the loop whose points fall into a node before returning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinArc {
    pub from: f64,
    pub to: f64,
    pub singularity: usize,
    /// Limit of the return map from the left end.
    pub value: f64,
    /// Disagreement between the limits from both ends.
    pub mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct ReturnMap {
    pub map: PiecewiseMonotoneCircleMap,
    pub samples: Vec<(f64, ReturnPoint)>,
    /// Loop parameters whose orbits neither returned nor settled.
    pub unresolved: Vec<f64>,
    pub basins: Vec<BasinArc>,
    pub return_time: (f64, f64),
}

struct Sampler<'a> {
    field: &'a TorusVectorField,
    lp: &'a TransverseLoop,
    tol: f64,
    budget: f64,
    map_tol: f64,
}

impl Sampler<'_> {
    fn at(&self, y: f64) -> ReturnPoint {
        let r = first_return(self.field, self.lp, y, self.tol, self.budget);
        if let ReturnPoint::Stalled { .. } = r {
            // nudge off the separatrix
            return first_return(self.field, self.lp, y + 1e-9, self.tol, self.budget);
        }
        r
    }

    /// Boundary between a returning point `xr` and a captured point `xc`:
    /// returns the last returning parameter and its value.
    fn boundary(&self, mut xr: f64, mut vr: f64, mut xc: f64) -> (f64, f64) {
        for _ in 0..80 {
            if (xr - xc).abs() < 1e-13 {
                break;
            }
            let m = 0.5 * (xr + xc);
            match self.at(m).value() {
                Some(v) => {
                    xr = m;
                    vr = v;
                }
                None => xc = m,
            }
        }
        (xr, vr)
    }

    fn refine(&self, xa: f64, va: f64, xb: f64, vb: f64, depth: usize, out: &mut Vec<(f64, f64)>) {
        if depth == 0 || xb - xa < 1e-12 {
            return;
        }
        let m = 0.5 * (xa + xb);
        let Some(vm) = self.at(m).value() else { return };
        // out of order: integration noise dominates the chord
        if !(va < vm && vm < vb) {
            return;
        }
        if (vm - 0.5 * (va + vb)).abs() > self.map_tol {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            rayon::join(
                || self.refine(xa, va, m, vm, depth - 1, &mut left),
                || self.refine(m, vm, xb, vb, depth - 1, &mut right),
            );
            out.append(&mut left);
            out.push((m, vm));
            out.append(&mut right);
        }
    }

    /// Looks for a discontinuity in `(xa, xb)` by following the steeper half.
    fn jump(&self, mut xa: f64, mut va: f64, mut xb: f64, mut vb: f64) -> Option<(f64, f64, f64)> {
        let slope0 = (vb - va) / (xb - xa);
        for _ in 0..80 {
            if xb - xa < 1e-13 {
                break;
            }
            let m = 0.5 * (xa + xb);
            let vm = match self.at(m).value() {
                Some(v) => v,
                None => {
                    // the orbit of m settles: the discontinuity sits here
                    xb = m;
                    break;
                }
            };
            if vm - va >= vb - vm {
                xb = m;
                vb = vm;
            } else {
                xa = m;
                va = vm;
            }
        }
        let gap = vb - va;
        (gap > 1e-7 && gap > 1e3 * slope0 * (xb - xa)).then_some((xb, va, vb))
    }
}

/// Sampled first-return map of `field` on `lp` at `resolution` points.
pub fn induced_return_map(field: &TorusVectorField, lp: &TransverseLoop, resolution: usize) -> Result<ReturnMap, FlowError> {
    induced_return_map_with(field, lp, &ReturnOptions::with_resolution(resolution))
}

pub fn induced_return_map_with(
    field: &TorusVectorField,
    lp: &TransverseLoop,
    opts: &ReturnOptions,
) -> Result<ReturnMap, FlowError> {
    let margin = lp.transversality_margin(field, 1024);
    if !(margin > 0.0) {
        return Err(FlowError::NotTransverse { margin });
    }
    let n = opts.resolution.max(8);
    let sampler = Sampler {
        field,
        lp,
        tol: opts.tol,
        budget: opts.budget,
        map_tol: opts.map_tol,
    };
    let ys: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let rets: Vec<ReturnPoint> = ys.par_iter().map(|&y| sampler.at(y)).collect();
    let samples: Vec<(f64, ReturnPoint)> = ys.iter().copied().zip(rets.iter().copied()).collect();

    let unresolved: Vec<f64> = samples
        .iter()
        .filter(|(_, r)| matches!(r, ReturnPoint::Unresolved))
        .map(|(y, _)| *y)
        .collect();
    let usable: Vec<usize> = (0..n).filter(|&i| !matches!(rets[i], ReturnPoint::Unresolved)).collect();
    let m = usable.len();
    if m == 0 {
        return Err(FlowError::Return("no sample orbit resolved".into()));
    }
    let start = (0..m)
        .find(|&k| rets[usable[k]].value().is_some() && rets[usable[(k + m - 1) % m]].value().is_some())
        .ok_or_else(|| FlowError::Return("no two consecutive returning samples".into()))?;

    // lifted knots in cyclic order from the start sample
    let knot = |k: usize| -> (f64, ReturnPoint) {
        let i = usable[(start + k) % m];
        let turns = ((start + k) / m) as f64;
        let r = match rets[i] {
            ReturnPoint::Returned { y, time } => ReturnPoint::Returned { y: y + turns, time },
            other => other,
        };
        (ys[i] + turns, r)
    };
    let (x_start, r0) = knot(0);
    let v_start = (r0.value().unwrap() + 1.0) - 1.0;
    let mut increments: Vec<f64> = (0..m)
        .filter_map(|k| {
            let (xa, ra) = knot(k);
            let (xb, rb) = knot(k + 1);
            Some((rb.value()? - ra.value()?) / (xb - xa))
        })
        .collect();
    increments.sort_by(f64::total_cmp);
    let typical = increments.get(increments.len() / 2).copied().unwrap_or(1.0);

    let mut pieces: Vec<Piece> = Vec::new();
    let mut basins = Vec::new();
    let (mut cx, mut cy) = (x_start, v_start);
    let mut plateau: Option<(f64, usize)> = None;
    // affine pieces from the current knot to (x1, y1), refined until the
    // chords match the flow to map_tol
    let push = |pieces: &mut Vec<Piece>, cx: &mut f64, cy: &mut f64, x1: f64, y1: f64| {
        if x1 <= *cx {
            return;
        }
        let mut knots = Vec::new();
        sampler.refine(*cx, *cy, x1, y1, 40, &mut knots);
        knots.push((x1, y1));
        let last = knots.len() - 1;
        for (i, (x, y)) in knots.into_iter().enumerate() {
            if x <= *cx || (y <= *cy && i < last) {
                continue;
            }
            let y = y.max(*cy);
            pieces.push(Piece::affine(*cx, x, *cy, y));
            *cx = x;
            *cy = y;
        }
    };
    for k in 0..m {
        let (xa, ra) = knot(k);
        let (xb, rb) = if k + 1 == m {
            (x_start + 1.0, ReturnPoint::Returned { y: v_start + 1.0, time: 0.0 })
        } else {
            knot(k + 1)
        };
        match (ra.value(), rb.value()) {
            (Some(va), Some(vb)) => {
                if (vb - va) > 8.0 * typical * (xb - xa) + 1e-9 {
                    if let Some((c, left, right)) = sampler.jump(xa, va, xb, vb) {
                        push(&mut pieces, &mut cx, &mut cy, c, left);
                        cy = right.max(cy);
                    }
                }
                push(&mut pieces, &mut cx, &mut cy, xb, vb);
            }
            (Some(va), None) => {
                let (b, w) = sampler.boundary(xa, va, xb);
                push(&mut pieces, &mut cx, &mut cy, b, w);
                let s = match rb {
                    ReturnPoint::Captured { singularity, .. } => singularity,
                    _ => usize::MAX,
                };
                plateau = Some((b, s));
            }
            (None, Some(vb)) => {
                let (b, w) = sampler.boundary(xb, vb, xa);
                let (from, s) = plateau.take().unwrap_or((cx, usize::MAX));
                if b > cx {
                    pieces.push(Piece::affine(cx, b, cy, cy));
                }
                basins.push(BasinArc {
                    from,
                    to: b,
                    singularity: s,
                    value: cy,
                    mismatch: (w - cy).abs(),
                });
                cx = b.max(cx);
                push(&mut pieces, &mut cx, &mut cy, xb, vb);
            }
            (None, None) => {}
        }
    }
    if let Some(last) = pieces.last_mut() {
        last.x1 = x_start + 1.0;
        last.y1 = v_start + 1.0;
    }
    let times: Vec<f64> = rets
        .iter()
        .filter_map(|r| match r {
            ReturnPoint::Returned { time, .. } => Some(*time),
            _ => None,
        })
        .collect();
    let return_time = (
        times.iter().copied().fold(f64::INFINITY, f64::min),
        times.iter().copied().fold(0.0, f64::max),
    );
    let mut map = PiecewiseMonotoneCircleMap::new(pieces)?.with_provenance(Provenance::Sampled { samples: n });
    if let Some(h) = known_rotation(field) {
        map = map.with_handle(h);
    }
    Ok(ReturnMap {
        map,
        samples,
        unresolved,
        basins,
        return_time,
    })
}

/// Rotation number of the return map when the construction fixes it.
fn known_rotation(field: &TorusVectorField) -> Option<AlphaHandle> {
    if field.twist.is_some_and(|t| t.a != 0.0) {
        return None;
    }
    match &field.provenance {
        FieldProvenance::Blowup { handle, tuned } if *tuned || field.patches.is_empty() => Some(handle.clone()),
        _ => None,
    }
}

/// Vertical loop as far as possible from every cell patch.
pub fn default_loop(field: &TorusVectorField) -> TransverseLoop {
    let clearance = |x: f64| {
        field
            .patches
            .iter()
            .map(|p| {
                let d = x - p.spec.seed[0];
                (d - d.round()).abs() - p.radius
            })
            .fold(f64::INFINITY, f64::min)
    };
    let x0 = (0..256)
        .map(|i| i as f64 / 256.0)
        .max_by(|a, b| clearance(*a).total_cmp(&clearance(*b)))
        .unwrap_or(0.0);
    TransverseLoop::vertical(if field.patches.is_empty() { 0.0 } else { x0 })
}

/// Blow-up whose base slope is tuned so that the sampled return map on `lp`
/// has the rotation number of `handle`.
///
/// A pass with coarse maps locates the slope; maps at `opts.map_tol` then
/// settle it inside a small window around that value.
pub fn tune_blowup(
    handle: &AlphaHandle,
    cells: &[CellSpec],
    lp: &TransverseLoop,
    opts: &ReturnOptions,
    q_limit: i64,
) -> Result<(TorusVectorField, TunedParameter), FlowError> {
    let alpha = handle.to_f64();
    let build = |o: ReturnOptions| {
        move |slope: f64| -> Result<PiecewiseMonotoneCircleMap, RotationError> {
            let f = build_blowup_with_slope(handle, slope, cells).map_err(wrap)?;
            Ok(induced_return_map_with(&f, lp, &o).map_err(wrap)?.map)
        }
    };
    let coarse = ReturnOptions {
        map_tol: opts.map_tol.max(1e-7),
        ..*opts
    };
    let mut tuned = tune_parameter(build(coarse), (alpha - 0.2, alpha + 0.2), handle, q_limit)?;
    if coarse.map_tol > opts.map_tol {
        let mut w = 1e-6;
        loop {
            let window = ((tuned.value - w).max(alpha - 0.2), (tuned.value + w).min(alpha + 0.2));
            match tune_parameter(build(*opts), window, handle, q_limit) {
                Ok(t) => {
                    tuned = t;
                    break;
                }
                Err(RotationError::TargetOutOfRange { .. }) if w < 0.1 => w *= 10.0,
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut field = build_blowup_with_slope(handle, tuned.value, cells)?;
    field.provenance = FieldProvenance::Blowup {
        handle: handle.clone(),
        tuned: true,
    };
    Ok((field, tuned))
}

fn wrap(e: FlowError) -> RotationError {
    RotationError::Map(CircleMapError::Other(e.to_string()))
}

/// Is the orbit of `p` free of capture by a node for `budget` time units
/// both ways? Orbits stalling at a saddle lie on a separatrix and pass.
pub fn is_recurrent_candidate(field: &TorusVectorField, p: [f64; 2], budget: f64) -> bool {
    [1.0, -1.0].iter().all(|&sigma| {
        let mut tr = Tracer::new(field);
        tr.sigma = sigma;
        let seg = tr.run(p, budget);
        !matches!(seg.outcome, Outcome::Captured { .. })
    })
}

/// Loop of class (0, 1) through `p`: the vertical circle when it is
/// transverse and keeps `tube` away from singularities, otherwise the circle
/// bent away from the offending patches.
pub fn construct_transversal(field: &TorusVectorField, p: [f64; 2], tube: f64) -> Result<TransverseLoop, FlowError> {
    if !is_recurrent_candidate(field, p, 50.0) {
        return Err(FlowError::NoTransversal(format!(
            "({}, {}) is not recurrent: its orbit settles at a node",
            p[0], p[1]
        )));
    }
    let ok = |l: &TransverseLoop| l.transversality_margin(field, 4096) > 0.05 && l.avoids_singularities(field, tube);
    let vertical = TransverseLoop::vertical(p[0].rem_euclid(1.0));
    if ok(&vertical) {
        return Ok(vertical);
    }
    // bend around every patch met by the vertical circle, keeping p fixed
    for &scale in &[1.0, 1.5, 2.0, 3.0] {
        let mut l = vertical.clone();
        for (i, pt) in field.patches.iter().enumerate() {
            let d = l.x0 - pt.spec.seed[0];
            let d = d - d.round();
            let need = pt.radius + tube - d.abs();
            if need <= 0.0 {
                continue;
            }
            let amount = scale * need * if d >= 0.0 { 1.0 } else { -1.0 };
            let hw = (2.8 * pt.radius * scale).min(0.45);
            let dy = p[1] - pt.spec.seed[1];
            if (dy - dy.round()).abs() < hw {
                return Err(FlowError::NoTransversal(format!("p lies in the bend around cell {i}")));
            }
            l.deflections.push(Deflection {
                y: pt.spec.seed[1],
                half_width: hw,
                amount,
            });
        }
        if ok(&l) {
            return Ok(l);
        }
    }
    Err(FlowError::NoTransversal("no bend keeps the loop transverse".into()))
}

/// Any sink or source listed in the field.
pub fn has_nodes(field: &TorusVectorField) -> bool {
    field
        .singularities
        .iter()
        .any(|s| matches!(s.kind, SingularityKind::Sink | SingularityKind::Source))
}
