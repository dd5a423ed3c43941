//! Bivariate Taylor jets truncated at total degree 4, used to read off exact
//! partial derivatives of closed-form fields.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 4;
pub const LEN: usize = 15;

/// Index of the coefficient of `dx^i dy^j`.
pub const fn idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

/// Numbers a field can be evaluated over: `f64` or [`Jet`].
pub trait FieldNum:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + Sized
{
    fn cst(v: f64) -> Self;
    /// Constant part.
    fn re(&self) -> f64;
    fn scale(&self, k: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powi(&self, n: u32) -> Self {
        let mut r = Self::cst(1.0);
        for _ in 0..n {
            r = r * self.clone();
        }
        r
    }
}

impl FieldNum for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The coordinate `x` (or `y`) expanded at `v`.
    pub fn var_x(v: f64) -> Self {
        let mut j = Self::constant(v);
        j.c[idx(1, 0)] = 1.0;
        j
    }

    pub fn var_y(v: f64) -> Self {
        let mut j = Self::constant(v);
        j.c[idx(0, 1)] = 1.0;
        j
    }

    /// `∂^{i+j} f / ∂x^i ∂y^j`.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.c[idx(i, j)] * fact(i) * fact(j)
    }

    /// `Σ_k d_k (self − c0)^k / k!` for derivatives `d` of a univariate function at `c0`.
    fn compose(&self, d: [f64; ORDER + 1]) -> Self {
        let mut t = *self;
        t.c[0] = 0.0;
        let mut out = Jet::constant(d[0]);
        let mut pw = Jet::constant(1.0);
        for (k, dk) in d.iter().enumerate().skip(1) {
            pw = pw * t;
            let f = dk / fact(k);
            for (o, p) in out.c.iter_mut().zip(pw.c.iter()) {
                *o += f * p;
            }
        }
        out
    }
}

fn fact(n: usize) -> f64 {
    [1.0, 1.0, 2.0, 6.0, 24.0][n]
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for d1 in 0..=ORDER {
            for j1 in 0..=d1 {
                let a = self.c[idx(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(ORDER - d1) {
                    for j2 in 0..=d2 {
                        c[idx(d1 - j1 + d2 - j2, j1 + j2)] += a * o.c[idx(d2 - j2, j2)];
                    }
                }
            }
        }
        Jet { c }
    }
}

impl FieldNum for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn scale(&self, k: f64) -> Self {
        let mut j = *self;
        for a in j.c.iter_mut() {
            *a *= k;
        }
        j
    }
    fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([s, c, -s, -c, s])
    }
    fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([c, -s, -c, s, c])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_partials() {
        // f = x^2 y^3 at (2, 1): f_xy = 2x·3y^2 = 12, f_xxyy = 2·6y = 12
        let x = Jet::var_x(2.0);
        let y = Jet::var_y(1.0);
        let f = x * x * y * y * y;
        assert_eq!(f.partial(0, 0), 4.0);
        assert_eq!(f.partial(1, 1), 12.0);
        assert_eq!(f.partial(2, 2), 12.0);
        assert_eq!(f.partial(3, 1), 0.0);
    }

    #[test]
    fn trig_derivatives() {
        let x = Jet::var_x(0.3);
        let s = x.scale(2.0).sin();
        for k in 0..=4 {
            let exact = 2f64.powi(k as i32) * (0.6 + k as f64 * std::f64::consts::FRAC_PI_2).sin();
            assert!((s.partial(k, 0) - exact).abs() < 1e-12);
        }
    }
}
