//! Sampling-based cell classification: every grid point gets a forward and
//! a backward limit label, and equal labels are grouped into cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{SingularityKind, TorusVectorField};
use super::integrate::{Outcome, Tracer};

/// Smallest cluster of unresolved points reported as a grey candidate.
pub const GREY_MIN_POINTS: usize = 9;
pub const MIN_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "singularity", rename_all = "snake_case")]
pub enum Label {
    /// Limit set is the recurrent set.
    Quasiminimal,
    /// Limit set is the listed singularity.
    Node(usize),
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLabel {
    /// ω-limit.
    pub forward: Label,
    /// α-limit.
    pub backward: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellType {
    /// α-limit a repellor, ω-limit the recurrent set.
    ForwardBlack,
    /// α-limit the recurrent set, ω-limit an attractor.
    BackwardBlack,
    MedialBlack,
    GreyCandidate,
    Quasiminimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellType,
    /// Limit singularities `(α, ω)` where they are nodes or saddles.
    pub alpha: Option<usize>,
    pub omega: Option<usize>,
    pub points: usize,
    /// Grid components making up the cell.
    pub components: usize,
    pub area: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellReport {
    pub grid: usize,
    pub budget: f64,
    /// Row-major: index `j·grid + i` is the point `((i+½)/grid, (j+½)/grid)`.
    pub labels: Vec<CellLabel>,
    pub cells: Vec<Cell>,
    pub resolved_fraction: f64,
    pub low_confidence: bool,
    pub grey_candidates: usize,
    /// No forward and backward black cells at once.
    pub co_directed: bool,
    /// The field carries both attractors and repellors: cells seeded in
    /// opposite directions merge into medial cells instead.
    pub opposed_nodes: bool,
}

impl CellReport {
    pub fn count(&self, kind: CellType) -> usize {
        self.cells.iter().filter(|c| c.kind == kind).count()
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let g = self.grid as f64;
        [((k % self.grid) as f64 + 0.5) / g, ((k / self.grid) as f64 + 0.5) / g]
    }

    /// Medial points dilated by `dilation` grid cells (the sampled closure
    /// of the union of medial cells).
    pub fn medial_closure(&self, dilation: usize) -> Vec<bool> {
        let n = self.grid;
        let medial: Vec<bool> = self.labels.iter().map(|l| point_type(l) == Some(CellType::MedialBlack)).collect();
        let mut out = vec![false; n * n];
        let r = dilation as i64;
        for (k, _) in medial.iter().enumerate().filter(|(_, m)| **m) {
            let (i, j) = ((k % n) as i64, (k / n) as i64);
            for di in -r..=r {
                for dj in -r..=r {
                    let ii = (i + di).rem_euclid(n as i64) as usize;
                    let jj = (j + dj).rem_euclid(n as i64) as usize;
                    out[jj * n + ii] = true;
                }
            }
        }
        out
    }

    /// Whether `p` falls in a grid cell of the dilated medial closure.
    pub fn in_medial_closure(&self, closure: &[bool], p: [f64; 2]) -> bool {
        let n = self.grid;
        let i = ((p[0].rem_euclid(1.0) * n as f64) as usize).min(n - 1);
        let j = ((p[1].rem_euclid(1.0) * n as f64) as usize).min(n - 1);
        closure[j * n + i]
    }
}

fn point_type(l: &CellLabel) -> Option<CellType> {
    use Label::*;
    match (l.backward, l.forward) {
        (Unresolved, _) | (_, Unresolved) => None,
        (Quasiminimal, Quasiminimal) => Some(CellType::Quasiminimal),
        (Node(_), Quasiminimal) => Some(CellType::ForwardBlack),
        (Quasiminimal, Node(_)) => Some(CellType::BackwardBlack),
        (Node(_), Node(_)) => Some(CellType::MedialBlack),
    }
}

fn limit(field: &TorusVectorField, p: [f64; 2], sigma: f64, budget: f64) -> Label {
    let target = if sigma > 0.0 { SingularityKind::Sink } else { SingularityKind::Source };
    if !field.singularities.iter().any(|s| s.kind == target) {
        return Label::Quasiminimal;
    }
    let mut tr = Tracer::new(field);
    tr.sigma = sigma;
    match tr.run(p, budget).outcome {
        Outcome::Captured { singularity } | Outcome::NearSingularity { singularity, .. } => Label::Node(singularity),
        _ => Label::Unresolved,
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a] = b;
        }
    }
}

/// Components of grid points with `key(k) == Some(_)`, joined when keys match.
fn components<K: PartialEq + Copy>(n: usize, key: impl Fn(usize) -> Option<K>) -> Vec<(K, Vec<usize>)> {
    let mut dsu = Dsu((0..n * n).collect());
    for k in 0..n * n {
        let Some(a) = key(k) else { continue };
        let (i, j) = (k % n, k / n);
        for nb in [j * n + (i + 1) % n, ((j + 1) % n) * n + i] {
            if key(nb) == Some(a) {
                dsu.union(k, nb);
            }
        }
    }
    let mut roots: Vec<(usize, K, Vec<usize>)> = Vec::new();
    for k in 0..n * n {
        let Some(a) = key(k) else { continue };
        let r = dsu.find(k);
        match roots.iter_mut().find(|(rr, ..)| *rr == r) {
            Some((_, _, v)) => v.push(k),
            None => roots.push((r, a, vec![k])),
        }
    }
    roots.into_iter().map(|(_, a, v)| (a, v)).collect()
}

/// Labels a `grid × grid` lattice by limit behaviour within `budget` time
/// units each way and assembles cells.
pub fn classify_cells(field: &TorusVectorField, grid: usize, budget: f64) -> CellReport {
    let n = grid.max(2);
    let labels: Vec<CellLabel> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let p = [((k % n) as f64 + 0.5) / n as f64, ((k / n) as f64 + 0.5) / n as f64];
            CellLabel {
                forward: limit(field, p, 1.0, budget),
                backward: limit(field, p, -1.0, budget),
            }
        })
        .collect();
    let resolved = labels.iter().filter(|l| point_type(l).is_some()).count();
    let area = 1.0 / (n * n) as f64;

    // black cells: one per limit pair, however many grid components it has
    let key = |k: usize| -> Option<(CellType, Option<usize>, Option<usize>)> {
        let l = &labels[k];
        let t = point_type(l)?;
        let idx = |x: Label| match x {
            Label::Node(i) => Some(i),
            _ => None,
        };
        (t != CellType::Quasiminimal).then(|| (t, idx(l.backward), idx(l.forward)))
    };
    let comps = components(n, key);
    let mut cells: Vec<Cell> = Vec::new();
    for ((kind, alpha, omega), pts) in comps {
        match cells.iter_mut().find(|c| c.kind == kind && c.alpha == alpha && c.omega == omega) {
            Some(c) => {
                c.points += pts.len();
                c.components += 1;
                c.area += pts.len() as f64 * area;
            }
            None => cells.push(Cell {
                kind,
                alpha,
                omega,
                points: pts.len(),
                components: 1,
                area: pts.len() as f64 * area,
            }),
        }
    }
    let grey: Vec<Vec<usize>> = components(n, |k| point_type(&labels[k]).is_none().then_some(()))
        .into_iter()
        .map(|(_, v)| v)
        .filter(|v| v.len() >= GREY_MIN_POINTS)
        .collect();
    for v in &grey {
        cells.push(Cell {
            kind: CellType::GreyCandidate,
            alpha: None,
            omega: None,
            points: v.len(),
            components: 1,
            area: v.len() as f64 * area,
        });
    }
    let fwd = cells.iter().any(|c| c.kind == CellType::ForwardBlack);
    let bwd = cells.iter().any(|c| c.kind == CellType::BackwardBlack);
    let resolved_fraction = resolved as f64 / (n * n) as f64;
    CellReport {
        grid: n,
        budget,
        labels,
        cells,
        resolved_fraction,
        low_confidence: resolved_fraction < MIN_CONFIDENCE,
        grey_candidates: grey.len(),
        co_directed: !(fwd && bwd),
        opposed_nodes: field.has_sinks() && field.has_sources(),
    }
}
