//! Closed-form torus fields: a linear flow of slope `α` with cell patches
//! (node + trace-zero saddle) and an optional twist term.

use serde::{Deserialize, Serialize};

use super::jet::{FieldNum, Jet, ORDER};
use super::FlowError;
use crate::cfrac::AlphaHandle;

/// `(1 − t²)^5` on `|t| < 1`: C⁴ at the boundary.
pub fn bump<T: FieldNum>(t: T) -> T {
    if t.re().abs() >= 1.0 {
        return T::cst(0.0);
    }
    (T::cst(1.0) - t.clone() * t).powi(5)
}

/// C⁴ step from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
pub fn smoothstep<T: FieldNum>(t: T) -> T {
    let r = t.re();
    if r <= 0.0 {
        return T::cst(0.0);
    }
    if r >= 1.0 {
        return T::cst(1.0);
    }
    // 126t^5 − 420t^6 + 540t^7 − 315t^8 + 70t^9, Horner in t
    let coeffs = [70.0, -315.0, 540.0, -420.0, 126.0];
    let mut p = T::cst(coeffs[0]);
    for &c in &coeffs[1..] {
        p = p * t.clone() + T::cst(c);
    }
    p * t.powi(5)
}

/// 1 on `|u| ≤ a`, 0 on `|u| ≥ b`, C⁴ in between.
pub fn flat_top<T: FieldNum>(u: T, a: f64, b: f64) -> T {
    let abs = if u.re() < 0.0 { -u } else { u };
    if abs.re() <= a {
        return T::cst(1.0);
    }
    smoothstep((T::cst(b) - abs).scale(1.0 / (b - a)))
}

/// Offset to the nearest image on the circle.
fn wrap<T: FieldNum>(d: T) -> T {
    let k = d.re().round();
    d - T::cst(k)
}

fn wrap_f(d: f64) -> f64 {
    d - d.round()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Source + saddle: the source basin is a forward black cell.
    Forward,
    /// Sink + saddle: the sink basin is a backward black cell.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub seed: [f64; 2],
    pub kind: CellKind,
    /// Half-width of the patch across the flow.
    #[serde(default = "default_width")]
    pub width: f64,
    /// Half-length of the patch along the flow.
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_width() -> f64 {
    0.05
}
fn default_length() -> f64 {
    0.1
}

const KAPPA: f64 = 2.0;

/// `t` with `bump(t) = 1/κ`.
fn node_offset() -> f64 {
    (1.0 - KAPPA.powf(-0.2)).sqrt()
}

/// Local model around a seed in flow coordinates `(u, w)`:
/// `u' = s(1 − κ·bump(u/L)·bump(w/W))`, `w' = ∓λ·w·m(u)·n(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPatch {
    pub spec: CellSpec,
    pub speed: f64,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
    pub lambda: f64,
    pub radius: f64,
}

impl CellPatch {
    fn new(spec: CellSpec, alpha: f64) -> Self {
        let s = (1.0 + alpha * alpha).sqrt();
        let td = node_offset();
        let lambda = s * KAPPA * 10.0 * td * (1.0 - td * td).powi(4) / spec.length;
        CellPatch {
            spec,
            speed: s,
            e1: [1.0 / s, alpha / s],
            e2: [-alpha / s, 1.0 / s],
            lambda,
            radius: spec.length.hypot(spec.width),
        }
    }

    fn sign(&self) -> f64 {
        match self.spec.kind {
            CellKind::Backward => -1.0,
            CellKind::Forward => 1.0,
        }
    }

    pub fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = wrap_f(x - self.spec.seed[0]);
        let dy = wrap_f(y - self.spec.seed[1]);
        (dx * self.e1[0] + dy * self.e1[1], dx * self.e2[0] + dy * self.e2[1])
    }

    /// Inside the support rectangle.
    pub fn active(&self, x: f64, y: f64) -> bool {
        let (u, w) = self.local(x, y);
        u.abs() < self.spec.length && w.abs() < self.spec.width
    }

    /// Inside the bounding disk.
    pub fn near(&self, x: f64, y: f64) -> bool {
        let dx = wrap_f(x - self.spec.seed[0]);
        let dy = wrap_f(y - self.spec.seed[1]);
        dx * dx + dy * dy < self.radius * self.radius
    }

    fn contrib<T: FieldNum>(&self, x: T, y: T) -> (T, T) {
        let dx = wrap(x - T::cst(self.spec.seed[0]));
        let dy = wrap(y - T::cst(self.spec.seed[1]));
        let u = dx.scale(self.e1[0]) + dy.scale(self.e1[1]);
        let w = dx.scale(self.e2[0]) + dy.scale(self.e2[1]);
        let (l, h) = (self.spec.length, self.spec.width);
        if u.re().abs() >= l || w.re().abs() >= h {
            return (T::cst(0.0), T::cst(0.0));
        }
        let du = -(bump(u.scale(1.0 / l)) * bump(w.scale(1.0 / h))).scale(self.speed * KAPPA);
        let dw = (w.clone() * flat_top(u, 0.5 * l, 0.8 * l) * flat_top(w, 0.3 * h, 0.6 * h)).scale(self.sign() * self.lambda);
        (
            du.scale(self.e1[0]) + dw.scale(self.e2[0]),
            du.scale(self.e1[1]) + dw.scale(self.e2[1]),
        )
    }

    fn point(&self, offset: f64) -> [f64; 2] {
        let d = offset * self.spec.length * node_offset();
        [
            (self.spec.seed[0] + d * self.e1[0]).rem_euclid(1.0),
            (self.spec.seed[1] + d * self.e1[1]).rem_euclid(1.0),
        ]
    }

    fn global_jacobian(&self, eu: f64, ew: f64) -> [[f64; 2]; 2] {
        // R diag(eu, ew) Rᵀ with R = [e1 e2]
        let (a, b) = (self.e1, self.e2);
        [
            [eu * a[0] * a[0] + ew * b[0] * b[0], eu * a[0] * a[1] + ew * b[0] * b[1]],
            [eu * a[1] * a[0] + ew * b[1] * b[0], eu * a[1] * a[1] + ew * b[1] * b[1]],
        ]
    }

    fn singularities(&self, cell: usize) -> Vec<Singularity> {
        let l = self.lambda;
        let (node, saddle, node_eig, saddle_eig, node_kind) = match self.spec.kind {
            CellKind::Backward => (self.point(-1.0), self.point(1.0), (-l, -l), (l, -l), SingularityKind::Sink),
            CellKind::Forward => (self.point(1.0), self.point(-1.0), (l, l), (-l, l), SingularityKind::Source),
        };
        vec![
            Singularity {
                position: node,
                kind: node_kind,
                jacobian: self.global_jacobian(node_eig.0, node_eig.1),
                divergence: node_eig.0 + node_eig.1,
                cell,
            },
            Singularity {
                position: saddle,
                kind: SingularityKind::Saddle,
                jacobian: self.global_jacobian(saddle_eig.0, saddle_eig.1),
                divergence: saddle_eig.0 + saddle_eig.1,
                cell,
            },
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityKind {
    Saddle,
    Source,
    Sink,
    Focus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub position: [f64; 2],
    pub kind: SingularityKind,
    pub jacobian: [[f64; 2]; 2],
    /// Trace of the model jacobian, summed from its eigenvalues.
    pub divergence: f64,
    /// Index of the cell patch carrying it.
    pub cell: usize,
}

impl Singularity {
    pub fn zero_divergence_saddle(&self) -> bool {
        self.kind == SingularityKind::Saddle && self.divergence.abs() < 1e-12
    }

    /// Kind read off the jacobian (trace/determinant test).
    pub fn classify(j: &[[f64; 2]; 2]) -> SingularityKind {
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det < 0.0 {
            SingularityKind::Saddle
        } else if tr * tr < 4.0 * det {
            SingularityKind::Focus
        } else if tr < 0.0 {
            SingularityKind::Sink
        } else {
            SingularityKind::Source
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `(1 − t²)^5`.
    #[default]
    Poly,
    /// `cos²(πt/2)`.
    CosSquared,
}

impl Profile {
    pub fn value<T: FieldNum>(&self, t: T) -> T {
        if t.re().abs() >= 1.0 {
            return T::cst(0.0);
        }
        match self {
            Profile::Poly => bump(t),
            Profile::CosSquared => {
                let c = t.scale(std::f64::consts::FRAC_PI_2).cos();
                c.clone() * c
            }
        }
    }

    /// `∫_{-1}^{t} profile`.
    pub fn primitive(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let f = |s: f64| match self {
            Profile::Poly => {
                let s2 = s * s;
                s * (1.0 + s2 * (-5.0 / 3.0 + s2 * (2.0 + s2 * (-10.0 / 7.0 + s2 * (5.0 / 9.0 - s2 / 11.0)))))
            }
            Profile::CosSquared => 0.5 * s + (std::f64::consts::PI * s).sin() / (2.0 * std::f64::consts::PI),
        };
        f(t) - f(-1.0)
    }
}

/// `a·ψ((x − x0)/h)` added to the `y` component on the strip `|x − x0| < h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistTerm {
    pub x0: f64,
    pub half_width: f64,
    pub profile: Profile,
    pub a: f64,
}

impl TwistTerm {
    fn contrib<T: FieldNum>(&self, x: T) -> T {
        let t = wrap(x - T::cst(self.x0)).scale(1.0 / self.half_width);
        self.profile.value(t).scale(self.a)
    }

    /// `∫ψ` across the whole strip.
    pub fn mass(&self) -> f64 {
        self.half_width * self.profile.primitive(1.0)
    }

    /// `∫_{x0−h}^{x0−h+s} ψ` for `0 ≤ s ≤ 2h`.
    pub fn partial_mass(&self, s: f64) -> f64 {
        self.half_width * self.profile.primitive(s / self.half_width - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldProvenance {
    Linear,
    Blowup {
        handle: AlphaHandle,
        /// Base slope tuned so the return map has the handle's rotation number.
        tuned: bool,
    },
}

/// JSON field specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub alpha: AlphaHandle,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    /// Base slope actually used; defaults to the handle value.
    #[serde(default)]
    pub slope: Option<f64>,
    #[serde(default)]
    pub twist: Option<TwistTerm>,
}

#[derive(Clone, Debug)]
pub struct TorusVectorField {
    pub alpha: f64,
    pub patches: Vec<CellPatch>,
    pub twist: Option<TwistTerm>,
    pub singularities: Vec<Singularity>,
    pub provenance: FieldProvenance,
}

fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    wrap_f(a[0] - b[0]).hypot(wrap_f(a[1] - b[1]))
}

impl TorusVectorField {
    pub fn linear(alpha: f64) -> Self {
        TorusVectorField {
            alpha,
            patches: Vec::new(),
            twist: None,
            singularities: Vec::new(),
            provenance: FieldProvenance::Linear,
        }
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self, FlowError> {
        let slope = spec.slope.unwrap_or_else(|| spec.alpha.to_f64());
        let mut f = build_blowup_with_slope(&spec.alpha, slope, &spec.cells)?;
        if let Some(t) = spec.twist {
            f = f.with_twist(t)?;
        }
        Ok(f)
    }

    pub fn spec(&self) -> FieldSpec {
        let alpha = match &self.provenance {
            FieldProvenance::Blowup { handle, .. } => handle.clone(),
            FieldProvenance::Linear => AlphaHandle::Real { value: self.alpha },
        };
        FieldSpec {
            alpha,
            cells: self.patches.iter().map(|p| p.spec).collect(),
            slope: Some(self.alpha),
            twist: self.twist,
        }
    }

    pub fn handle(&self) -> Option<AlphaHandle> {
        match &self.provenance {
            FieldProvenance::Blowup { handle, .. } => Some(handle.clone()),
            FieldProvenance::Linear => None,
        }
    }

    /// Adds a twist term; its strip must stay clear of every cell patch.
    pub fn with_twist(mut self, t: TwistTerm) -> Result<Self, FlowError> {
        for (i, p) in self.patches.iter().enumerate() {
            let gap = wrap_f(p.spec.seed[0] - t.x0).abs();
            if gap < t.half_width + p.radius {
                return Err(FlowError::TwistMeetsCell { cell: i });
            }
        }
        self.twist = Some(t);
        Ok(self)
    }

    pub fn eval<T: FieldNum>(&self, x: T, y: T) -> (T, T) {
        let (xr, yr) = (x.re(), y.re());
        let mut fx = T::cst(1.0);
        let mut fy = T::cst(self.alpha);
        for p in &self.patches {
            if p.near(xr, yr) {
                let (a, b) = p.contrib(x.clone(), y.clone());
                fx = fx + a;
                fy = fy + b;
            }
        }
        if let Some(t) = &self.twist {
            fy = fy + t.contrib(x);
        }
        (fx, fy)
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let (a, b) = self.eval(x, y);
        [a, b]
    }

    pub fn jets(&self, x: f64, y: f64) -> (Jet, Jet) {
        self.eval(Jet::var_x(x), Jet::var_y(y))
    }

    /// Index of the patch whose bounding disk contains the point.
    pub fn patch_at(&self, x: f64, y: f64) -> Option<usize> {
        self.patches.iter().position(|p| p.near(x, y))
    }

    /// Field jacobian from jets.
    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let (a, b) = self.jets(x, y);
        [[a.partial(1, 0), a.partial(0, 1)], [b.partial(1, 0), b.partial(0, 1)]]
    }

    /// Field translated so that `z ↦ X(z + v)`.
    pub fn translated(&self, v: [f64; 2]) -> Self {
        let mut f = self.clone();
        for p in f.patches.iter_mut() {
            p.spec.seed = [(p.spec.seed[0] - v[0]).rem_euclid(1.0), (p.spec.seed[1] - v[1]).rem_euclid(1.0)];
        }
        if let Some(t) = f.twist.as_mut() {
            t.x0 = (t.x0 - v[0]).rem_euclid(1.0);
        }
        for s in f.singularities.iter_mut() {
            s.position = [(s.position[0] - v[0]).rem_euclid(1.0), (s.position[1] - v[1]).rem_euclid(1.0)];
        }
        f
    }

    pub fn has_sinks(&self) -> bool {
        self.singularities.iter().any(|s| s.kind == SingularityKind::Sink)
    }

    pub fn has_sources(&self) -> bool {
        self.singularities.iter().any(|s| s.kind == SingularityKind::Source)
    }

    /// Zeros of the field on a `grid × grid` lattice refined by Newton; each
    /// is matched against the listed singularities.
    pub fn find_zeros(&self, grid: usize) -> Vec<([f64; 2], Option<usize>)> {
        let mut out: Vec<([f64; 2], Option<usize>)> = Vec::new();
        let h = 1.0 / grid as f64;
        for i in 0..grid {
            for j in 0..grid {
                let (x0, y0) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if self.patch_at(x0, y0).is_none() {
                    continue;
                }
                let v = self.velocity(x0, y0);
                if v[0].hypot(v[1]) > 50.0 * h * (1.0 + self.patches.iter().map(|p| p.lambda).fold(0.0, f64::max)) {
                    continue;
                }
                let (mut x, mut y) = (x0, y0);
                let mut ok = false;
                for _ in 0..50 {
                    let v = self.velocity(x, y);
                    if v[0].hypot(v[1]) < 1e-13 {
                        ok = true;
                        break;
                    }
                    let j = self.jacobian(x, y);
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    if det.abs() < 1e-14 {
                        break;
                    }
                    x -= (j[1][1] * v[0] - j[0][1] * v[1]) / det;
                    y -= (-j[1][0] * v[0] + j[0][0] * v[1]) / det;
                }
                if !ok || (x - x0).abs() > 2.0 * h || (y - y0).abs() > 2.0 * h {
                    continue;
                }
                let z = [x.rem_euclid(1.0), y.rem_euclid(1.0)];
                if out.iter().any(|(p, _)| torus_dist(*p, z) < 1e-6) {
                    continue;
                }
                let m = self.singularities.iter().position(|s| torus_dist(s.position, z) < 1e-6);
                out.push((z, m));
            }
        }
        out
    }
}

/// Linear flow of slope `slope` with one patch per cell spec.
pub fn build_blowup_with_slope(handle: &AlphaHandle, slope: f64, cells: &[CellSpec]) -> Result<TorusVectorField, FlowError> {
    let patches: Vec<CellPatch> = cells.iter().map(|c| CellPatch::new(*c, slope)).collect();
    for (i, p) in patches.iter().enumerate() {
        if !(p.spec.width > 0.0 && p.spec.length > 0.0 && p.radius < 0.25) {
            return Err(FlowError::BadCell(format!("cell {i}: sizes must be positive with radius < 1/4")));
        }
        for (j, q) in patches.iter().enumerate().skip(i + 1) {
            if torus_dist(p.spec.seed, q.spec.seed) < p.radius + q.radius {
                return Err(FlowError::OverlappingCells(i, j));
            }
        }
    }
    let singularities = patches.iter().enumerate().flat_map(|(i, p)| p.singularities(i)).collect();
    Ok(TorusVectorField {
        alpha: slope,
        patches,
        twist: None,
        singularities,
        provenance: FieldProvenance::Blowup {
            handle: handle.clone(),
            tuned: false,
        },
    })
}

/// Blow-up of the linear flow with slope equal to the handle.
pub fn build_blowup(handle: &AlphaHandle, cells: &[CellSpec]) -> Result<TorusVectorField, FlowError> {
    build_blowup_with_slope(handle, handle.to_f64(), cells)
}

/// `∂X/∂x + ∂Y/∂y` from jets.
pub fn divergence_at(field: &TorusVectorField, p: [f64; 2]) -> f64 {
    let (a, b) = field.jets(p[0], p[1]);
    a.partial(1, 0) + b.partial(0, 1)
}

/// Max over a `grid × grid` lattice of all partial-derivative differences of
/// order ≤ `r` (a finite proxy for the C^r distance).
pub fn jet_norm_distance(a: &TorusVectorField, b: &TorusVectorField, r: usize, grid: usize) -> Result<f64, FlowError> {
    if r > ORDER {
        return Err(FlowError::Smoothness { r, max: ORDER });
    }
    let mut best: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let (x, y) = (i as f64 / grid as f64, j as f64 / grid as f64);
            let (ax, ay) = a.jets(x, y);
            let (bx, by) = b.jets(x, y);
            for d in 0..=r {
                for k in 0..=d {
                    let (p, q) = (d - k, k);
                    best = best
                        .max((ax.partial(p, q) - bx.partial(p, q)).abs())
                        .max((ay.partial(p, q) - by.partial(p, q)).abs());
                }
            }
        }
    }
    Ok(best)
}
