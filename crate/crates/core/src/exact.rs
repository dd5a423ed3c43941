//! Exact arithmetic in real quadratic fields, plus the [`Scalar`] abstraction
//! shared by exact and floating circle-point computations.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// Number type usable as a circle coordinate.
///
/// Exact implementations compare without tolerance; `f64` compares with the
/// plain IEEE order and callers apply their own tolerances.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_int(n: i64) -> Self;
    fn floor_int(&self) -> i64;
    fn to_f64(&self) -> f64;
    /// `self * num / den`.
    fn scale(&self, num: i64, den: i64) -> Self;
    fn cmp_total(&self, other: &Self) -> Ordering;
    fn is_exact() -> bool;

    fn zero() -> Self {
        Self::from_int(0)
    }

    fn fract(&self) -> Self {
        self.clone() - Self::from_int(self.floor_int())
    }

    fn is_zero_value(&self) -> bool {
        self.cmp_total(&Self::zero()) == Ordering::Equal
    }

    fn abs_value(&self) -> Self {
        if self.cmp_total(&Self::zero()) == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn floor_int(&self) -> i64 {
        self.floor() as i64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn scale(&self, num: i64, den: i64) -> Self {
        self * num as f64 / den as f64
    }
    fn cmp_total(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
    fn is_exact() -> bool {
        false
    }
}

/// An element `a + b·√d` of the real quadratic field `Q(√d)`.
///
/// `d` is a positive non-square integer, or `0` for a plain rational.
/// Values with `b = 0` combine with any `d`.
#[derive(Clone, Debug, Eq)]
pub struct QuadNumber {
    pub a: Rational,
    pub b: Rational,
    pub d: i64,
}

impl QuadNumber {
    pub fn rational(a: Rational) -> Self {
        QuadNumber {
            a,
            b: Rational::zero(),
            d: 0,
        }
    }

    pub fn from_ratio(p: i128, q: i128) -> Self {
        Self::rational(Rational::new(p, q))
    }

    /// `a + b√d`; `d` must not be a perfect square unless `b = 0`.
    pub fn new(a: Rational, b: Rational, d: i64) -> Self {
        if b.is_zero() {
            return Self::rational(a);
        }
        assert!(d > 0 && !is_square(d), "√{d} is not a quadratic irrational");
        QuadNumber { a, b, d }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn common_d(&self, other: &Self) -> i64 {
        match (self.b.is_zero(), other.b.is_zero()) {
            (true, _) => other.d,
            (_, true) => self.d,
            _ => {
                assert_eq!(self.d, other.d, "mixing different quadratic fields");
                self.d
            }
        }
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a² with b²·d
        let a2 = self.a * self.a;
        let b2d = self.b * self.b * Rational::from_integer(self.d as i128);
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }

    pub fn conjugate(&self) -> Self {
        QuadNumber {
            a: self.a,
            b: -self.b,
            d: self.d,
        }
    }

    /// Field norm `a² − b²d`.
    pub fn norm(&self) -> Rational {
        self.a * self.a - self.b * self.b * Rational::from_integer(self.d as i128)
    }

    pub fn recip(&self) -> Self {
        let n = self.norm();
        assert!(!n.is_zero(), "division by zero in Q(√d)");
        let c = self.conjugate();
        QuadNumber {
            a: c.a / n,
            b: c.b / n,
            d: self.d,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.clone() * other.recip()
    }

    pub fn mul_rational(&self, r: Rational) -> Self {
        QuadNumber {
            a: self.a * r,
            b: self.b * r,
            d: self.d,
        }
    }
}

fn sign_of(r: &Rational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub(crate) fn is_square(d: i64) -> bool {
    if d < 0 {
        return false;
    }
    let r = (d as f64).sqrt().round() as i64;
    (r - 1..=r + 1).any(|s| s >= 0 && s * s == d)
}

impl Add for QuadNumber {
    type Output = QuadNumber;
    fn add(self, rhs: Self) -> Self {
        let d = self.common_d(&rhs);
        QuadNumber {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            d,
        }
    }
}

impl Sub for QuadNumber {
    type Output = QuadNumber;
    fn sub(self, rhs: Self) -> Self {
        let d = self.common_d(&rhs);
        QuadNumber {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
            d,
        }
    }
}

impl Mul for QuadNumber {
    type Output = QuadNumber;
    fn mul(self, rhs: Self) -> Self {
        let d = self.common_d(&rhs);
        let dd = Rational::from_integer(d as i128);
        QuadNumber {
            a: self.a * rhs.a + self.b * rhs.b * dd,
            b: self.a * rhs.b + self.b * rhs.a,
            d,
        }
    }
}

impl Neg for QuadNumber {
    type Output = QuadNumber;
    fn neg(self) -> Self {
        QuadNumber {
            a: -self.a,
            b: -self.b,
            d: self.d,
        }
    }
}

impl PartialEq for QuadNumber {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.d == other.d)
    }
}

impl std::hash::Hash for QuadNumber {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        if !self.b.is_zero() {
            self.d.hash(state);
        }
    }
}

impl PartialOrd for QuadNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_total(other))
    }
}

impl fmt::Display for QuadNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}·√{}", self.a, self.b, self.d)
        }
    }
}

impl Scalar for QuadNumber {
    fn from_int(n: i64) -> Self {
        Self::rational(Rational::from_integer(n as i128))
    }

    fn floor_int(&self) -> i64 {
        let approx = self.to_f64().floor() as i64;
        let mut n = approx;
        // correct any rounding slip of the float estimate
        loop {
            let lo = self.clone() - Self::from_int(n);
            if lo.signum() < 0 {
                n -= 1;
                continue;
            }
            let hi = Self::from_int(n + 1) - self.clone();
            if hi.signum() <= 0 {
                n += 1;
                continue;
            }
            return n;
        }
    }

    fn to_f64(&self) -> f64 {
        let a = ratio_f64(&self.a);
        if self.b.is_zero() {
            return a;
        }
        a + ratio_f64(&self.b) * (self.d as f64).sqrt()
    }

    fn scale(&self, num: i64, den: i64) -> Self {
        self.mul_rational(Rational::new(num as i128, den as i128))
    }

    fn cmp_total(&self, other: &Self) -> Ordering {
        match (self.clone() - other.clone()).signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    fn is_exact() -> bool {
        true
    }
}

pub(crate) fn ratio_f64(r: &Rational) -> f64 {
    let (n, d) = (*r.numer(), *r.denom());
    let g = n.gcd(&d);
    let (n, d) = (n / g, d / g);
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> QuadNumber {
        // (√5 − 1)/2
        QuadNumber::new(Rational::new(-1, 2), Rational::new(1, 2), 5)
    }

    #[test]
    fn golden_satisfies_its_quadratic() {
        let g = golden();
        // g² + g − 1 = 0
        let r = g.clone() * g.clone() + g - QuadNumber::from_int(1);
        assert_eq!(r.signum(), 0);
    }

    #[test]
    fn exact_floor_and_ordering() {
        let g = golden();
        assert_eq!(g.floor_int(), 0);
        assert_eq!(g.scale(8, 1).floor_int(), 4);
        assert_eq!((-g.clone()).floor_int(), -1);
        let half = QuadNumber::from_ratio(1, 2);
        assert_eq!(g.cmp_total(&half), Ordering::Greater);
        assert!((g.to_f64() - 0.6180339887498949).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_round_trips() {
        let g = golden();
        let one = g.clone() * g.recip();
        assert_eq!(one, QuadNumber::from_int(1));
        // 1/g = g + 1
        assert_eq!(g.recip(), g + QuadNumber::from_int(1));
    }

    #[test]
    fn squares_are_detected() {
        assert!(is_square(49));
        assert!(!is_square(5));
    }
}
