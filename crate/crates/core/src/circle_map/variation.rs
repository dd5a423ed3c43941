//! Total variation of `log Df` over the support of `Df`, taken around the
//! circle.

use serde::{Deserialize, Serialize};

use super::{CircleMap, CircleMapError, PiecewiseMonotoneCircleMap};

pub const VARIATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    #[serde(rename = "V")]
    pub v: f64,
    /// Partition attaining `v` (points in one fundamental domain).
    pub partition_witness: Vec<f64>,
    /// Successive estimates under refinement.
    pub estimates: Vec<f64>,
    pub tolerance: f64,
    pub finite: bool,
}

/// One-sided log-derivative data of a support interval.
struct Segment {
    first: f64,
    last: f64,
    internal: f64,
    points: Vec<f64>,
}

fn cyclic_total(segs: &[Segment]) -> f64 {
    let mut v: f64 = segs.iter().map(|s| s.internal).sum();
    for i in 0..segs.len() {
        let next = &segs[(i + 1) % segs.len()];
        v += (next.first - segs[i].last).abs();
    }
    v
}

fn table_segments(map: &PiecewiseMonotoneCircleMap, extra_midpoints: bool) -> Vec<Segment> {
    let mut out = Vec::new();
    for p in map.pieces() {
        if p.branch.is_plateau() {
            continue;
        }
        let scale = (p.y1 - p.y0) / (p.x1 - p.x0);
        let log_at = |t: f64| (scale * p.branch.slope(t)).ln();
        let mut ts = vec![0.0];
        ts.extend(p.branch.turning_points());
        ts.push(1.0);
        if extra_midpoints {
            let mut refined = Vec::with_capacity(ts.len() * 2);
            for w in ts.windows(2) {
                refined.push(w[0]);
                refined.push(0.5 * (w[0] + w[1]));
            }
            refined.push(1.0);
            ts = refined;
        }
        let vals: Vec<f64> = ts.iter().map(|&t| log_at(t)).collect();
        let internal = vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        out.push(Segment {
            first: vals[0],
            last: vals[vals.len() - 1],
            internal,
            points: ts.iter().map(|t| p.x0 + t * (p.x1 - p.x0)).collect(),
        });
    }
    out
}

fn table_variation(map: &PiecewiseMonotoneCircleMap) -> VariationReport {
    let coarse = table_segments(map, false);
    let fine = table_segments(map, true);
    let v0 = cyclic_total(&coarse);
    let v1 = cyclic_total(&fine);
    let mut witness: Vec<f64> = coarse.iter().flat_map(|s| s.points.iter().copied()).collect();
    witness.dedup();
    VariationReport {
        v: v0.max(v1),
        partition_witness: witness,
        estimates: vec![v0, v1],
        tolerance: VARIATION_TOL,
        finite: v0.is_finite() && (v1 - v0).abs() < VARIATION_TOL.max(1e-12 * v0),
    }
}

fn sampled_segments<M: CircleMap + ?Sized>(map: &M, n: usize) -> Vec<Segment> {
    let mut bps = map.breakpoints();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    if bps.is_empty() {
        bps.push(0.0);
    }
    let m = bps.len();
    let mut out = Vec::new();
    for i in 0..m {
        let a = bps[i];
        let b = if i + 1 < m { bps[i + 1] } else { bps[0] + 1.0 };
        let w = b - a;
        let nudge = w * 1e-9;
        let (lo, hi) = (a + nudge, b - nudge);
        if map.derivative(0.5 * (a + b)) == 0.0 {
            continue;
        }
        let pts: Vec<f64> = (0..=n).map(|j| lo + (hi - lo) * j as f64 / n as f64).collect();
        let vals: Vec<f64> = pts.iter().map(|&x| map.derivative(x).ln()).collect();
        out.push(Segment {
            first: vals[0],
            last: vals[n],
            internal: vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
            points: pts,
        });
    }
    out
}

/// Sampled estimate for maps without a piece table: each smooth interval is
/// subdivided, doubling until two estimates agree to `tol`.
pub fn variation_sampled<M: CircleMap + ?Sized>(map: &M, tol: f64, max_level: u32) -> VariationReport {
    let mut estimates = Vec::new();
    let mut n = 8usize;
    let mut segs = sampled_segments(map, n);
    estimates.push(cyclic_total(&segs));
    let mut finite = false;
    for _ in 0..max_level {
        n *= 2;
        segs = sampled_segments(map, n);
        let v = cyclic_total(&segs);
        let prev = *estimates.last().unwrap();
        estimates.push(v);
        if !v.is_finite() {
            break;
        }
        if (v - prev).abs() < tol {
            finite = true;
            break;
        }
    }
    let v = estimates.iter().copied().fold(0.0, f64::max);
    VariationReport {
        v,
        partition_witness: segs.iter().flat_map(|s| s.points.iter().copied()).collect(),
        estimates,
        tolerance: tol,
        finite,
    }
}

/// `var log Df` over `supp(Df)`.
///
/// Piece tables are handled exactly: the partition consists of the piece
/// ends and the turning points of each branch, on which `log Df` is
/// monotone; one midpoint refinement confirms the supremum.
pub fn variation_log_derivative(map: &dyn CircleMap) -> Result<VariationReport, CircleMapError> {
    if let Some(t) = map.as_table() {
        return Ok(table_variation(t));
    }
    Ok(variation_sampled(map, VARIATION_TOL, 14))
}
