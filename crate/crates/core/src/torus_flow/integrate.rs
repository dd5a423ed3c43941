//! Orbit integration: exact transport through the linear region (and the
//! twist strip), Dormand–Prince 5(4) inside cell patches, with loop-crossing
//! events located to step accuracy.

use serde::{Deserialize, Serialize};

use super::field::{SingularityKind, TorusVectorField};
use super::loops::TransverseLoop;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_BUDGET: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    /// Lifted position.
    pub x: f64,
    pub y: f64,
    /// Integer level of the section function reached.
    pub level: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// Reached the end of the time span.
    Completed,
    /// Reached the requested number of loop crossings.
    Crossings,
    /// Entered the capture disk of a node (sink forwards, source backwards).
    Captured { singularity: usize },
    /// Stalled next to a singularity; the orbit is truncated.
    NearSingularity { singularity: usize, distance: f64 },
    StepUnderflow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    /// `(t, x, y)` with lifted positions.
    pub points: Vec<[f64; 3]>,
    pub crossings: Vec<Crossing>,
    pub outcome: Outcome,
    pub end: [f64; 2],
    pub t_end: f64,
}

// Dormand–Prince tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step of signed size `h`; returns the 5th-order point
/// and the error estimate.
fn dp_step(field: &TorusVectorField, z: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let _ = C;
    let mut k = [[0.0f64; 2]; 7];
    k[0] = field.velocity(z[0], z[1]);
    for s in 1..7 {
        let mut p = z;
        for (j, kj) in k.iter().enumerate().take(s) {
            p[0] += h * A[s][j] * kj[0];
            p[1] += h * A[s][j] * kj[1];
        }
        k[s] = field.velocity(p[0], p[1]);
    }
    let mut out = z;
    for (j, kj) in k.iter().enumerate().take(6) {
        out[0] += h * A[6][j] * kj[0];
        out[1] += h * A[6][j] * kj[1];
    }
    let mut err = [0.0f64; 2];
    for (j, kj) in k.iter().enumerate() {
        err[0] += h * E[j] * kj[0];
        err[1] += h * E[j] * kj[1];
    }
    (out, err[0].abs().max(err[1].abs()))
}

/// Orbit tracer with optional loop events and node capture.
pub struct Tracer<'a> {
    pub field: &'a TorusVectorField,
    pub section: Option<&'a TransverseLoop>,
    pub tol: f64,
    /// +1 forwards, −1 backwards.
    pub sigma: f64,
    pub record: bool,
    pub max_crossings: Option<usize>,
    pub capture: bool,
}

impl<'a> Tracer<'a> {
    pub fn new(field: &'a TorusVectorField) -> Self {
        Tracer {
            field,
            section: None,
            tol: DEFAULT_TOL,
            sigma: 1.0,
            record: false,
            max_crossings: None,
            capture: true,
        }
    }

    fn capture_radius(&self, i: usize) -> f64 {
        let s = &self.field.singularities[i];
        0.1 * self.field.patches[s.cell].spec.length
    }

    fn check_nodes(&self, z: [f64; 2]) -> Option<Outcome> {
        for (i, s) in self.field.singularities.iter().enumerate() {
            let dx = z[0] - s.position[0];
            let dy = z[1] - s.position[1];
            let d = (dx - dx.round()).hypot(dy - dy.round());
            let target = if self.sigma > 0.0 {
                SingularityKind::Sink
            } else {
                SingularityKind::Source
            };
            if self.capture && s.kind == target && d < self.capture_radius(i) {
                return Some(Outcome::Captured { singularity: i });
            }
            if s.kind == SingularityKind::Saddle && d < 1e-8 {
                return Some(Outcome::NearSingularity {
                    singularity: i,
                    distance: d,
                });
            }
        }
        None
    }

    fn section_value(&self, z: [f64; 2]) -> Option<f64> {
        self.section.map(|l| l.section(z[0], z[1]))
    }

    /// Section level the orbit starts from.
    fn start_level(&self, s0: f64) -> f64 {
        if (s0 - s0.round()).abs() < 1e-9 {
            s0.round()
        } else if self.sigma > 0.0 {
            s0.floor()
        } else {
            s0.ceil()
        }
    }

    fn reached(&self, s: f64, target: f64) -> bool {
        self.sigma * (s - target) >= 0.0
    }

    /// `y` after exact transport outside the patches from `x0` to `x1`.
    fn transport_y(&self, x0: f64, y0: f64, x1: f64) -> f64 {
        let mut y = y0 + self.field.alpha * (x1 - x0);
        if let Some(t) = &self.field.twist {
            y += t.a * (cumulative(t, x1) - cumulative(t, x0));
        }
        y
    }

    /// Distance in `x` (along the direction of motion) to the first entry into
    /// a patch bounding disk, if below `limit`.
    fn next_patch_entry(&self, z: [f64; 2], limit: f64) -> Option<f64> {
        let a = self.field.alpha;
        let mut best: Option<f64> = None;
        for p in &self.field.patches {
            let r = p.radius;
            let cx = p.spec.seed[0];
            // first image of the seed column at or beyond x − r along the motion
            let mut m = if self.sigma > 0.0 {
                (z[0] - r - cx).ceil()
            } else {
                (z[0] + r - cx).floor()
            };
            loop {
                let xm = cx + m;
                let ahead = self.sigma * (xm - z[0]);
                if ahead - r > limit.min(best.unwrap_or(f64::INFINITY)) {
                    break;
                }
                let ym = self.transport_y(z[0], z[1], xm);
                let d = ym - p.spec.seed[1];
                let d = d - d.round();
                let disc = a * a * d * d - (1.0 + a * a) * (d * d - r * r);
                if disc > 0.0 {
                    let sq = disc.sqrt();
                    let xi = if self.sigma > 0.0 {
                        (-a * d - sq) / (1.0 + a * a)
                    } else {
                        (-a * d + sq) / (1.0 + a * a)
                    };
                    let dist = self.sigma * (xm + xi - z[0]);
                    if dist > 0.0 {
                        best = Some(best.map_or(dist, |b: f64| b.min(dist)));
                        break;
                    }
                }
                m += self.sigma;
            }
        }
        best.filter(|&b| b <= limit)
    }

    /// Distance in `x` to the next section crossing along exact transport.
    fn next_crossing_transport(&self, z: [f64; 2], k: f64, limit: f64) -> Option<f64> {
        let l = self.section?;
        let s0 = l.section(z[0], z[1]);
        let g = l.max_deflection();
        let s_at = |dx: f64| {
            let x = z[0] + self.sigma * dx;
            l.section(x, self.transport_y(z[0], z[1], x))
        };
        // the crossing lies within |k − s0| ± g of the start
        let mut lo = ((k - s0).abs() - g).max(0.0);
        let mut hi = (k - s0).abs() + g + 1e-12;
        if lo > limit {
            return None;
        }
        if !self.reached(s_at(hi), k) {
            return None;
        }
        if g == 0.0 {
            let d = (k - s0).abs();
            return (d <= limit).then_some(d);
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.reached(s_at(mid), k) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (hi <= limit).then_some(hi)
    }

    /// Traces from `z0` (lifted) for at most `duration` time units.
    pub fn run(&self, z0: [f64; 2], duration: f64) -> OrbitSegment {
        let mut z = z0;
        let mut t = 0.0;
        let mut pts = Vec::new();
        let mut crossings = Vec::new();
        if self.record {
            pts.push([0.0, z[0], z[1]]);
        }
        let mut h: f64 = 1e-3;
        let mut target = self.section_value(z).map(|s0| self.start_level(s0) + self.sigma);
        let outcome = 'outer: loop {
            if t >= duration {
                break Outcome::Completed;
            }
            if let Some(o) = self.check_nodes(z) {
                break o;
            }
            if self.field.patch_at(z[0], z[1]).is_none() {
                // exact transport
                let remain = duration - t;
                let entry = self.next_patch_entry(z, remain);
                let lim = entry.unwrap_or(remain).min(remain);
                let hop = target.and_then(|k| self.next_crossing_transport(z, k, lim).map(|d| (d, k)));
                if let Some((dx, k)) = hop {
                    let level = k as i64;
                    target = Some(k + self.sigma);
                    let x1 = z[0] + self.sigma * dx;
                    z = [x1, self.transport_y(z[0], z[1], x1)];
                    t += dx;
                    crossings.push(Crossing { t, x: z[0], y: z[1], level });
                    if self.record {
                        pts.push([t, z[0], z[1]]);
                    }
                    if self.max_crossings.is_some_and(|m| crossings.len() >= m) {
                        break Outcome::Crossings;
                    }
                    continue;
                }
                // step a hair into the patch so the next pass integrates
                let dx = match entry {
                    Some(e) => e + 1e-12,
                    None => remain,
                };
                let x1 = z[0] + self.sigma * dx;
                z = [x1, self.transport_y(z[0], z[1], x1)];
                t += dx;
                if self.record {
                    pts.push([t, z[0], z[1]]);
                }
                continue;
            }
            // Dormand–Prince inside the patch; steps stay short against its size
            let h_max = 0.1 * self.field.patches[self.field.patch_at(z[0], z[1]).unwrap()].radius;
            loop {
                let hs = h.min(h_max).min(duration - t).max(1e-14);
                let (z1, err) = dp_step(self.field, z, self.sigma * hs);
                // error per unit step: global error stays near tol per unit time
                let ratio = err / (self.tol * hs);
                if ratio > 1.0 {
                    h = hs * (0.9 * ratio.powf(-0.2)).max(0.2);
                    if h < 1e-13 {
                        break 'outer Outcome::StepUnderflow;
                    }
                    continue;
                }
                let mut z_new = z1;
                let mut t_new = t + hs;
                let mut hit = None;
                if let (Some(k), Some(s1)) = (target, self.section_value(z1)) {
                    if self.reached(s1, k) {
                        let level = k as i64;
                        target = Some(k + self.sigma);
                        // shrink the step onto the section
                        let l = self.section.unwrap();
                        let (mut lo, mut hi) = (0.0, hs);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            let (zm, _) = dp_step(self.field, z, self.sigma * mid);
                            let sm = l.section(zm[0], zm[1]);
                            if self.reached(sm, k) {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        let (zh, _) = dp_step(self.field, z, self.sigma * hi);
                        z_new = zh;
                        t_new = t + hi;
                        hit = Some(level);
                    }
                }
                z = z_new;
                t = t_new;
                if self.record {
                    pts.push([t, z[0], z[1]]);
                }
                h = hs * (0.9 * ratio.max(1e-10).powf(-0.2)).min(5.0);
                if let Some(level) = hit {
                    crossings.push(Crossing { t, x: z[0], y: z[1], level });
                    if self.max_crossings.is_some_and(|m| crossings.len() >= m) {
                        break 'outer Outcome::Crossings;
                    }
                }
                let v = self.field.velocity(z[0], z[1]);
                if v[0].hypot(v[1]) < 1e-12 {
                    if let Some(o) = self.check_nodes(z) {
                        break 'outer o;
                    }
                }
                break;
            }
        };
        OrbitSegment {
            points: pts,
            crossings,
            outcome,
            end: z,
            t_end: t,
        }
    }
}

/// Lifted `∫ψ` from a fixed origin; increases by the strip mass per turn.
fn cumulative(t: &super::field::TwistTerm, x: f64) -> f64 {
    let xi = x - (t.x0 - t.half_width);
    let n = xi.floor();
    let r = xi - n;
    n * t.mass() + t.partial_mass(r.min(2.0 * t.half_width))
}

/// Integrates over a signed time span.
pub fn integrate(
    field: &TorusVectorField,
    z0: [f64; 2],
    t_span: f64,
    tol: f64,
    section: Option<&TransverseLoop>,
) -> OrbitSegment {
    let mut tr = Tracer::new(field);
    tr.tol = tol;
    tr.sigma = if t_span < 0.0 { -1.0 } else { 1.0 };
    tr.record = true;
    tr.section = section;
    tr.capture = false;
    tr.run(z0, t_span.abs())
}
