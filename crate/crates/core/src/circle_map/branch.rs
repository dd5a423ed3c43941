//! Normalized monotone branches `H: [0,1] → [0,1]` used by piece tables.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Shape of a map piece in normalized coordinates.
///
/// A piece over `[x0, x1]` with lift values `y0 ≤ y1` evaluates to
/// `y0 + (y1 − y0)·H((x − x0)/(x1 − x0))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    Affine,
    Plateau,
    /// Cubic Hermite with normalized end slopes.
    Hermite { m0: f64, m1: f64 },
    HermiteInverse { m0: f64, m1: f64 },
    /// `t + b·sin(2πt)/(2π)`, `|b| < 1`.
    Sine { b: f64 },
    SineInverse { b: f64 },
}

fn hermite(t: f64, m0: f64, m1: f64) -> f64 {
    let s = 1.0 - t;
    t * t * (3.0 - 2.0 * t) + m0 * t * s * s - m1 * t * t * s
}

fn hermite_d(t: f64, m0: f64, m1: f64) -> f64 {
    6.0 * t * (1.0 - t) + m0 * (1.0 - t) * (1.0 - 3.0 * t) + m1 * t * (3.0 * t - 2.0)
}

fn hermite_flat(m0: f64, m1: f64) -> Option<f64> {
    // H'' is linear in t
    let c0 = 6.0 - 4.0 * m0 - 2.0 * m1;
    let c1 = -12.0 + 6.0 * m0 + 6.0 * m1;
    if c1 == 0.0 {
        return None;
    }
    let t = -c0 / c1;
    (t > 0.0 && t < 1.0).then_some(t)
}

fn sine(t: f64, b: f64) -> f64 {
    t + b * (TAU * t).sin() / TAU
}

fn sine_d(t: f64, b: f64) -> f64 {
    1.0 + b * (TAU * t).cos()
}

/// Solve `h(t) = s` on `[0,1]` for increasing `h` by safeguarded Newton.
fn invert(s: f64, h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut t = s;
    for _ in 0..100 {
        let v = h(t) - s;
        if v == 0.0 {
            return t;
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = dh(t);
        let mut next = if d > 0.0 { t - v / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-17 || hi - lo <= 1e-16 {
            return next;
        }
        t = next;
    }
    t
}

impl Branch {
    pub fn is_plateau(&self) -> bool {
        matches!(self, Branch::Plateau)
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Branch::Affine => t,
            Branch::Plateau => 0.0,
            Branch::Hermite { m0, m1 } => hermite(t, m0, m1),
            Branch::HermiteInverse { m0, m1 } => {
                invert(t, |u| hermite(u, m0, m1), |u| hermite_d(u, m0, m1))
            }
            Branch::Sine { b } => sine(t, b),
            Branch::SineInverse { b } => invert(t, |u| sine(u, b), |u| sine_d(u, b)),
        }
    }

    /// Normalized derivative `H'(t)`.
    pub fn slope(&self, t: f64) -> f64 {
        match *self {
            Branch::Affine => 1.0,
            Branch::Plateau => 0.0,
            Branch::Hermite { m0, m1 } => hermite_d(t, m0, m1),
            Branch::HermiteInverse { m0, m1 } => {
                let u = self.value(t);
                1.0 / hermite_d(u, m0, m1)
            }
            Branch::Sine { b } => sine_d(t, b),
            Branch::SineInverse { b } => 1.0 / sine_d(self.value(t), b),
        }
    }

    /// Solve `H(t) = s`.
    pub fn solve(&self, s: f64) -> f64 {
        match *self {
            Branch::Affine => s,
            Branch::Plateau => 0.0,
            Branch::Hermite { m0, m1 } => {
                invert(s, |u| hermite(u, m0, m1), |u| hermite_d(u, m0, m1))
            }
            Branch::HermiteInverse { m0, m1 } => hermite(s, m0, m1),
            Branch::Sine { b } => invert(s, |u| sine(u, b), |u| sine_d(u, b)),
            Branch::SineInverse { b } => sine(s, b),
        }
    }

    pub fn inverse(&self) -> Option<Branch> {
        Some(match *self {
            Branch::Affine => Branch::Affine,
            Branch::Plateau => return None,
            Branch::Hermite { m0, m1 } => Branch::HermiteInverse { m0, m1 },
            Branch::HermiteInverse { m0, m1 } => Branch::Hermite { m0, m1 },
            Branch::Sine { b } => Branch::SineInverse { b },
            Branch::SineInverse { b } => Branch::Sine { b },
        })
    }

    /// Interior points of `(0,1)` where `log H'` may turn.
    pub fn turning_points(&self) -> Vec<f64> {
        match *self {
            Branch::Affine | Branch::Plateau => vec![],
            Branch::Hermite { m0, m1 } => hermite_flat(m0, m1).into_iter().collect(),
            Branch::HermiteInverse { m0, m1 } => hermite_flat(m0, m1)
                .map(|t| hermite(t, m0, m1))
                .into_iter()
                .collect(),
            Branch::Sine { b } | Branch::SineInverse { b } => {
                if b == 0.0 {
                    vec![]
                } else {
                    vec![0.5]
                }
            }
        }
    }

    /// Checks that `H` is a strictly increasing diffeomorphism of `[0,1]`.
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Branch::Affine | Branch::Plateau => Ok(()),
            Branch::Hermite { m0, m1 } | Branch::HermiteInverse { m0, m1 } => {
                if !(m0 > 0.0 && m1 > 0.0 && m0.is_finite() && m1.is_finite()) {
                    return Err(format!("hermite end slopes must be positive, got {m0}, {m1}"));
                }
                if let Some(t) = hermite_flat(m0, m1) {
                    if hermite_d(t, m0, m1) <= 0.0 {
                        return Err(format!("hermite branch ({m0}, {m1}) is not monotone"));
                    }
                }
                Ok(())
            }
            Branch::Sine { b } | Branch::SineInverse { b } => {
                if b.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(format!("sine branch needs |b| < 1, got {b}"))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_matches_end_data() {
        let h = Branch::Hermite { m0: 0.7, m1: 1.6 };
        assert_eq!(h.value(0.0), 0.0);
        assert_eq!(h.value(1.0), 1.0);
        assert!((h.slope(0.0) - 0.7).abs() < 1e-15);
        assert!((h.slope(1.0) - 1.6).abs() < 1e-15);
        let eps = 1e-6;
        let fd = (h.value(0.3 + eps) - h.value(0.3 - eps)) / (2.0 * eps);
        assert!((fd - h.slope(0.3)).abs() < 1e-8);
    }

    #[test]
    fn inverses_round_trip() {
        for br in [
            Branch::Hermite { m0: 2.5, m1: 0.4 },
            Branch::Sine { b: 0.8 },
            Branch::SineInverse { b: -0.3 },
        ] {
            let inv = br.inverse().unwrap();
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                assert!((inv.value(br.value(t)) - t).abs() < 1e-13, "{br:?} at {t}");
                assert!((br.solve(br.value(t)) - t).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn monotonicity_validation() {
        assert!(Branch::Hermite { m0: 2.9, m1: 2.9 }.validate().is_ok());
        assert!(Branch::Hermite { m0: 3.0, m1: 3.0 }.validate().is_err());
        assert!(Branch::Sine { b: 1.0 }.validate().is_err());
    }
}
