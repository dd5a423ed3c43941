//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rotorlab::closest_returns::{ArcInterval, ReturnScaffold};
use rotorlab::exact::{QuadNumber, Scalar};

/// Times k ≤ limit at which ‖kα‖ beats every earlier k.
pub fn record_times(alpha: f64, limit: u64) -> Vec<u64> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for k in 1..=limit {
        let d = k as f64 * alpha;
        let d = (d - d.round()).abs();
        if d < best {
            best = d;
            out.push(k);
        }
    }
    out
}

/// Largest number of the arcs T + iα, 0 ≤ i < q, that share a point.
///
/// For closed arcs shorter than the circle the maximum is reached at some
/// arc start, and arc j holds the start of arc i exactly when T holds the
/// start of T shifted by (i − j)α, so only the differences need exact work.
pub fn translate_multiplicity(sc: &ReturnScaffold<QuadNumber>, t: &ArcInterval<QuadNumber>, q: i64) -> usize {
    if t.length.cmp_total(&QuadNumber::from_int(1)).is_ge() {
        return 1;
    }
    let span = (q - 1) as usize;
    let holds: Vec<bool> = (-(q - 1)..q)
        .map(|d| t.contains(&(t.start.clone() + sc.alpha.scale(d, 1)).fract()))
        .collect();
    (0..q as usize)
        .map(|i| (0..q as usize).filter(|&j| holds[i + span - j]).count())
        .max()
        .unwrap_or(0)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
