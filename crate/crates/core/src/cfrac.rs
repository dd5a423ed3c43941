//! Continued fractions: expansion, convergents, closest-return times and
//! quotient statistics, plus the rotation-number handles used everywhere else.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{QuadNumber, Rational, Scalar};

/// Float expansions stop once the Gauss-map residual drops below this.
pub const FLOAT_RESIDUAL_FLOOR: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfracError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value is not finite: {0}")]
    NotFinite(f64),
    #[error("index {n} out of range: expansion has {available} partial quotients")]
    IndexOutOfRange { n: usize, available: usize },
    #[error("cannot parse rotation number `{0}`")]
    Parse(String),
    #[error("periodic part of a quadratic irrational must be non-empty with quotients >= 1")]
    BadPeriod,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub a0: i64,
    /// a_1, a_2, …; every entry is at least 1.
    pub partial_quotients: Vec<u64>,
    /// True when the expansion terminated on an exact rational.
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub n: usize,
    pub p: i128,
    pub q: i128,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl ContinuedFraction {
    /// Quotient a_n with the a_0 convention (n = 0 gives a_0).
    pub fn quotient(&self, n: usize) -> Option<i64> {
        if n == 0 {
            Some(self.a0)
        } else {
            self.partial_quotients.get(n - 1).map(|&a| a as i64)
        }
    }

    /// Index of the deepest convergent available.
    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn value_f64(&self) -> f64 {
        let mut v = 0.0;
        for &a in self.partial_quotients.iter().rev() {
            v = 1.0 / (a as f64 + v);
        }
        self.a0 as f64 + v
    }

    pub fn stats(&self, window: usize) -> QuotientStats {
        QuotientStats::of(&self.partial_quotients, window)
    }

    /// CSV table with columns `n,a_n,p_n,q_n`.
    pub fn convergent_table_csv(&self) -> String {
        let mut out = String::from("n,a_n,p_n,q_n\n");
        for c in convergents(self) {
            let a = self.quotient(c.n).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", c.n, a, c.p, c.q));
        }
        out
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.a0)?;
        for (i, a) in self.partial_quotients.iter().enumerate() {
            write!(f, "{}{}", if i == 0 { "; " } else { ", " }, a)?;
        }
        write!(f, "]")
    }
}

/// Exact expansion of p/q by the Euclidean algorithm.
pub fn expand_rational(p: i128, q: i128) -> Result<ContinuedFraction, CfracError> {
    if q == 0 {
        return Err(CfracError::ZeroDenominator);
    }
    let (mut num, mut den) = if q < 0 { (-p, -q) } else { (p, q) };
    let a0 = num.div_euclid(den);
    let mut quotients = Vec::new();
    num -= a0 * den;
    while num != 0 {
        // value is num/den in (0,1); next quotient is floor(den/num)
        let a = den / num;
        let r = den - a * num;
        quotients.push(a as u64);
        den = num;
        num = r;
    }
    Ok(ContinuedFraction {
        a0: a0 as i64,
        partial_quotients: quotients,
        exact: true,
    })
}

/// Gauss-map expansion of a float, at most `depth` partial quotients.
pub fn expand_f64(x: f64, depth: usize) -> Result<ContinuedFraction, CfracError> {
    if !x.is_finite() {
        return Err(CfracError::NotFinite(x));
    }
    let a0 = x.floor();
    let mut r = x - a0;
    let mut quotients = Vec::with_capacity(depth);
    while quotients.len() < depth && r >= FLOAT_RESIDUAL_FLOOR {
        let y = 1.0 / r;
        let a = y.floor();
        quotients.push(a.max(1.0) as u64);
        r = y - a;
    }
    Ok(ContinuedFraction {
        a0: a0 as i64,
        partial_quotients: quotients,
        exact: r == 0.0,
    })
}

/// Convergents p_n/q_n for n = 0..=depth.
pub fn convergents(cf: &ContinuedFraction) -> Vec<Convergent> {
    let (mut p2, mut q2) = (0i128, 1i128); // p_{-2}, q_{-2}
    let (mut p1, mut q1) = (1i128, 0i128); // p_{-1}, q_{-1}
    let mut out = Vec::with_capacity(cf.depth() + 1);
    for n in 0..=cf.depth() {
        let a = cf.quotient(n).expect("index within depth") as i128;
        let p = a * p1 + p2;
        let q = a * q1 + q2;
        out.push(Convergent { n, p, q });
        p2 = p1;
        q2 = q1;
        p1 = p;
        q1 = q;
    }
    out
}

/// The closest-return times q_0, q_1, …, q_depth.
pub fn closest_return_times(cf: &ContinuedFraction) -> Vec<u64> {
    convergents(cf).into_iter().map(|c| c.q as u64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientStats {
    pub min: u64,
    pub max: u64,
    /// Minimum over the last `window` quotients, standing in for liminf.
    pub window_min: u64,
    pub window: usize,
}

impl QuotientStats {
    pub fn of(quotients: &[u64], window: usize) -> Self {
        let min = quotients.iter().copied().min().unwrap_or(0);
        let max = quotients.iter().copied().max().unwrap_or(0);
        let w = window.max(1).min(quotients.len().max(1));
        let tail = &quotients[quotients.len().saturating_sub(w)..];
        QuotientStats {
            min,
            max,
            window_min: tail.iter().copied().min().unwrap_or(0),
            window: w,
        }
    }
}

/// Eventually periodic continued fraction `[0; pre…, (period…)]` in (0,1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticIrrational {
    #[serde(default)]
    pub preperiod: Vec<u64>,
    pub period: Vec<u64>,
}

impl QuadraticIrrational {
    pub fn new(preperiod: Vec<u64>, period: Vec<u64>) -> Result<Self, CfracError> {
        if period.is_empty() || period.iter().chain(&preperiod).any(|&a| a == 0) {
            return Err(CfracError::BadPeriod);
        }
        Ok(QuadraticIrrational { preperiod, period })
    }

    /// (√5 − 1)/2 = [0; 1, 1, 1, …].
    pub fn golden() -> Self {
        QuadraticIrrational {
            preperiod: vec![],
            period: vec![1],
        }
    }

    /// [0; a, a, a, …].
    pub fn constant(a: u64) -> Self {
        QuadraticIrrational {
            preperiod: vec![],
            period: vec![a.max(1)],
        }
    }

    /// Partial quotient a_n for n ≥ 1 (a_0 = 0).
    pub fn quotient(&self, n: usize) -> u64 {
        if n == 0 {
            return 0;
        }
        let i = n - 1;
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// Largest quotient over the preperiod and one period (the bound K).
    pub fn max_quotient(&self) -> u64 {
        self.preperiod
            .iter()
            .chain(&self.period)
            .copied()
            .max()
            .unwrap_or(1)
    }

    pub fn expand(&self, depth: usize) -> ContinuedFraction {
        ContinuedFraction {
            a0: 0,
            partial_quotients: (1..=depth).map(|n| self.quotient(n)).collect(),
            exact: false,
        }
    }

    /// The exact value as an element of Q(√d).
    pub fn value(&self) -> QuadNumber {
        // purely periodic tail y = [b1; b2, …, bk, y] > 1
        let tail = ContinuedFraction {
            a0: self.period[0] as i64,
            partial_quotients: self.period[1..].to_vec(),
            exact: true,
        };
        let conv = convergents(&tail);
        let last = conv[conv.len() - 1];
        let (p, q) = (last.p, last.q);
        let (pp, qp) = if conv.len() >= 2 {
            let c = conv[conv.len() - 2];
            (c.p, c.q)
        } else {
            (1, 0)
        };
        // q y² + (qp − p) y − pp = 0
        let disc = (qp - p) * (qp - p) + 4 * q * pp;
        let (s, core) = split_square(disc);
        let two_q = 2 * q;
        let y = QuadNumber::new(
            Rational::new(p - qp, two_q),
            Rational::new(s, two_q),
            core as i64,
        );
        // α = [0; pre…, y] = (P y + P')/(Q y + Q') with P/Q the last convergent of [0; pre]
        let head = ContinuedFraction {
            a0: 0,
            partial_quotients: self.preperiod.clone(),
            exact: true,
        };
        let hc = convergents(&head);
        let c1 = hc[hc.len() - 1];
        let (p0, q0) = if hc.len() >= 2 {
            let c = hc[hc.len() - 2];
            (c.p, c.q)
        } else {
            (1, 0)
        };
        let num = y.clone().mul_rational(Rational::from_integer(c1.p))
            + QuadNumber::rational(Rational::from_integer(p0));
        let den =
            y.mul_rational(Rational::from_integer(c1.q)) + QuadNumber::rational(Rational::from_integer(q0));
        num.div(&den)
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64()
    }

    /// Recovers the periodic expansion of an irrational `x ∈ (0,1)` in Q(√d),
    /// giving up after `max_terms` complete quotients.
    pub fn from_value(x: &QuadNumber, max_terms: usize) -> Option<Self> {
        if x.is_rational() || x.signum() <= 0 || x.floor_int() != 0 {
            return None;
        }
        let mut seen: Vec<QuadNumber> = Vec::new();
        let mut quotients: Vec<u64> = Vec::new();
        let mut y = x.recip();
        for _ in 0..max_terms {
            if let Some(j) = seen.iter().position(|s| *s == y) {
                return Self::new(quotients[..j].to_vec(), quotients[j..].to_vec()).ok();
            }
            let a = y.floor_int();
            seen.push(y.clone());
            quotients.push(a as u64);
            y = (y - QuadNumber::from_int(a)).recip();
        }
        None
    }
}

/// Writes n = s²·core with core square-free.
fn split_square(n: i128) -> (i128, i128) {
    let mut s = 1i128;
    let mut core = n;
    let mut f = 2i128;
    while f * f <= core {
        while core % (f * f) == 0 {
            core /= f * f;
            s *= f;
        }
        f += 1;
    }
    (s, core)
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[0;")?;
        let mut first = true;
        for a in &self.preperiod {
            write!(f, "{}{}", if first { "" } else { "," }, a)?;
            first = false;
        }
        write!(f, "{}(", if first { "" } else { "," })?;
        for (i, a) in self.period.iter().enumerate() {
            write!(f, "{}{}", if i == 0 { "" } else { "," }, a)?;
        }
        write!(f, ")]")
    }
}

/// A rotation number together with how exactly it is known.
///
/// Stored as its label (`"2/5"`, `"[0;(1)]"`, `"0.3"`); the tagged object
/// form `{"type": "rational", "p": 2, "q": 5}` is accepted on input too.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaHandle {
    Rational { p: i64, q: i64 },
    Quadratic(QuadraticIrrational),
    Real { value: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TaggedHandle {
    Rational { p: i64, q: i64 },
    Quadratic(QuadraticIrrational),
    Real { value: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HandleRepr {
    Label(String),
    Tagged(TaggedHandle),
}

impl Serialize for AlphaHandle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for AlphaHandle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match HandleRepr::deserialize(d)? {
            HandleRepr::Label(s) => s.parse().map_err(serde::de::Error::custom),
            HandleRepr::Tagged(TaggedHandle::Rational { p, q }) => {
                if q == 0 {
                    return Err(serde::de::Error::custom(CfracError::ZeroDenominator));
                }
                Ok(AlphaHandle::Rational { p, q })
            }
            HandleRepr::Tagged(TaggedHandle::Quadratic(h)) => QuadraticIrrational::new(h.preperiod, h.period)
                .map(AlphaHandle::Quadratic)
                .map_err(serde::de::Error::custom),
            HandleRepr::Tagged(TaggedHandle::Real { value }) => Ok(AlphaHandle::Real { value }),
        }
    }
}

impl AlphaHandle {
    pub fn golden() -> Self {
        AlphaHandle::Quadratic(QuadraticIrrational::golden())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            AlphaHandle::Rational { p, q } => *p as f64 / *q as f64,
            AlphaHandle::Quadratic(h) => h.to_f64(),
            AlphaHandle::Real { value } => *value,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, AlphaHandle::Rational { .. })
    }

    /// Bounded-type handles are exactly the periodic quadratic irrationals.
    pub fn bounded_type(&self) -> Option<&QuadraticIrrational> {
        match self {
            AlphaHandle::Quadratic(h) => Some(h),
            _ => None,
        }
    }

    pub fn expand(&self, depth: usize) -> Result<ContinuedFraction, CfracError> {
        match self {
            AlphaHandle::Rational { p, q } => {
                let mut cf = expand_rational(*p as i128, *q as i128)?;
                if cf.depth() > depth {
                    cf.partial_quotients.truncate(depth);
                    cf.exact = false;
                }
                Ok(cf)
            }
            AlphaHandle::Quadratic(h) => Ok(h.expand(depth)),
            AlphaHandle::Real { value } => expand_f64(*value, depth),
        }
    }

    /// Exact value where one exists.
    pub fn exact_value(&self) -> Option<QuadNumber> {
        match self {
            AlphaHandle::Rational { p, q } => Some(QuadNumber::from_ratio(*p as i128, *q as i128)),
            AlphaHandle::Quadratic(h) => Some(h.value()),
            AlphaHandle::Real { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AlphaHandle::Rational { p, q } => format!("{p}/{q}"),
            AlphaHandle::Quadratic(h) => h.to_string(),
            AlphaHandle::Real { value } => format!("{value}"),
        }
    }
}

impl FromStr for AlphaHandle {
    type Err = CfracError;

    /// Accepts `p/q`, a decimal, `golden`, `silver`, or `[0;a,b,(c,d)]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || CfracError::Parse(s.to_string());
        match t {
            "golden" => return Ok(AlphaHandle::golden()),
            "silver" => return Ok(AlphaHandle::Quadratic(QuadraticIrrational::constant(2))),
            _ => {}
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| err())?;
            let q: i64 = q.trim().parse().map_err(|_| err())?;
            if q == 0 {
                return Err(CfracError::ZeroDenominator);
            }
            return Ok(AlphaHandle::Rational { p, q });
        }
        if let Some(body) = t.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let (head, rest) = body.split_once(';').ok_or_else(err)?;
            if head.trim() != "0" {
                return Err(err());
            }
            let open = rest.find('(').ok_or_else(err)?;
            let close = rest.rfind(')').ok_or_else(err)?;
            let parse_list = |seg: &str| -> Result<Vec<u64>, CfracError> {
                seg.split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| x.parse::<u64>().map_err(|_| err()))
                    .collect()
            };
            let pre = parse_list(&rest[..open])?;
            let per = parse_list(&rest[open + 1..close])?;
            return QuadraticIrrational::new(pre, per).map(AlphaHandle::Quadratic);
        }
        let v: f64 = t.parse().map_err(|_| err())?;
        if !v.is_finite() {
            return Err(CfracError::NotFinite(v));
        }
        Ok(AlphaHandle::Real { value: v })
    }
}

/// Result of the brute-force intermediate-return enumeration at level n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntermediateReturns {
    pub n: usize,
    /// Times i with q_n < i < q_{n+2} and R^i(0) in I_n \ I_{n+2}.
    pub times: Vec<u64>,
    pub count: usize,
    /// a_n − 1, the count quoted against index n.
    pub count_by_a_n: i64,
    /// a_{n+2} − 1, the count the recursion for q_{n+2} suggests.
    pub count_by_a_n_plus_2: i64,
}

/// Enumerates intermediate returns of the rotation by `alpha`, base point 0.
pub fn intermediate_return_times(
    alpha: &AlphaHandle,
    n: usize,
) -> Result<IntermediateReturns, CfracError> {
    let depth = n + 2;
    let cf = alpha.expand(depth)?;
    if cf.depth() < depth {
        return Err(CfracError::IndexOutOfRange {
            n,
            available: cf.depth(),
        });
    }
    let conv = convergents(&cf);
    let times = match alpha.exact_value() {
        Some(v) => intermediate_times_with(&v, &conv, n),
        None => intermediate_times_with(&alpha.to_f64(), &conv, n),
    };
    let a_n = cf.quotient(n).unwrap_or(0);
    let a_n2 = cf.quotient(n + 2).unwrap_or(0);
    Ok(IntermediateReturns {
        n,
        count: times.len(),
        times,
        count_by_a_n: a_n - 1,
        count_by_a_n_plus_2: a_n2 - 1,
    })
}

fn intermediate_times_with<S: Scalar>(alpha: &S, conv: &[Convergent], n: usize) -> Vec<u64> {
    let disp = |c: &Convergent| alpha.scale(c.q as i64, 1) - S::from_int(c.p as i64);
    let outer = disp(&conv[n]);
    let inner = disp(&conv[n + 2]);
    let positive = outer.cmp_total(&S::zero()).is_gt();
    let outer_abs = outer.abs_value();
    let inner_abs = inner.abs_value();
    let (lo, hi) = (conv[n].q as u64, conv[n + 2].q as u64);
    ((lo + 1)..hi)
        .filter(|&i| {
            let pt = alpha.scale(i as i64, 1).fract();
            if pt.is_zero_value() {
                return false;
            }
            // signed representative on the side of the closest returns
            let s = if positive { pt } else { S::from_int(1) - pt };
            s.cmp_total(&inner_abs).is_gt() && s.cmp_total(&outer_abs).is_le()
        })
        .collect()
}

/// Exact determinant p_n q_{n-1} − p_{n-1} q_n for n ≥ 1.
pub fn determinant(conv: &[Convergent], n: usize) -> i128 {
    conv[n].p * conv[n - 1].q - conv[n - 1].p * conv[n].q
}

/// Rebuilds p_N/q_N of an exact expansion as a reduced rational.
pub fn reconstruct(cf: &ContinuedFraction) -> Rational {
    let c = *convergents(cf).last().expect("at least a_0");
    Rational::new(c.p, c.q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_float_expands_to_ones() {
        let cf = expand_f64((5f64.sqrt() - 1.0) / 2.0, 6).unwrap();
        assert_eq!(cf.a0, 0);
        assert_eq!(cf.partial_quotients, vec![1; 6]);
        assert!(!cf.exact);
    }

    #[test]
    fn silver_float_expands_to_twos() {
        let cf = expand_f64(2f64.sqrt() - 1.0, 5).unwrap();
        assert_eq!(cf.partial_quotients, vec![2; 5]);
    }

    #[test]
    fn one_third_is_exact() {
        let cf = expand_rational(1, 3).unwrap();
        assert_eq!(cf.partial_quotients, vec![3]);
        assert!(cf.exact);
        let c = convergents(&cf);
        assert_eq!((c[1].p, c[1].q), (1, 3));
        assert_eq!(closest_return_times(&cf), vec![1, 3]);
    }

    #[test]
    fn fibonacci_denominators() {
        let cf = QuadraticIrrational::golden().expand(5);
        assert_eq!(closest_return_times(&cf), vec![1, 1, 2, 3, 5, 8]);
        let cf = QuadraticIrrational::golden().expand(6);
        assert_eq!(closest_return_times(&cf), vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn silver_convergents_by_hand() {
        let cf = QuadraticIrrational::constant(2).expand(3);
        let pq: Vec<_> = convergents(&cf).iter().map(|c| (c.p, c.q)).collect();
        assert_eq!(pq, vec![(0, 1), (1, 2), (2, 5), (5, 12)]);
        let cf = QuadraticIrrational::constant(2).expand(4);
        assert_eq!(closest_return_times(&cf), vec![1, 2, 5, 12, 29]);
    }

    #[test]
    fn exact_values_of_handles() {
        let g = QuadraticIrrational::golden().to_f64();
        assert!((g - 0.6180339887498949).abs() < 1e-15);
        let s = QuadraticIrrational::constant(2).to_f64();
        assert!((s - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let h = QuadraticIrrational::new(vec![3], vec![1, 2]).unwrap();
        let cf = expand_f64(h.to_f64(), 8).unwrap();
        assert_eq!(cf.partial_quotients, vec![3, 1, 2, 1, 2, 1, 2, 1]);
    }

    #[test]
    fn parsing_handles() {
        assert_eq!("1/3".parse::<AlphaHandle>().unwrap(), AlphaHandle::Rational { p: 1, q: 3 });
        assert_eq!("golden".parse::<AlphaHandle>().unwrap(), AlphaHandle::golden());
        let q: AlphaHandle = "[0;2,(1,3)]".parse().unwrap();
        assert_eq!(
            q,
            AlphaHandle::Quadratic(QuadraticIrrational::new(vec![2], vec![1, 3]).unwrap())
        );
        assert!(matches!("0.25".parse::<AlphaHandle>().unwrap(), AlphaHandle::Real { .. }));
        assert!("1/0".parse::<AlphaHandle>().is_err());
        assert!("x".parse::<AlphaHandle>().is_err());
    }

    #[test]
    fn golden_has_no_intermediate_returns() {
        for n in 0..5 {
            let r = intermediate_return_times(&AlphaHandle::golden(), n).unwrap();
            assert_eq!(r.count, 0, "n = {n}");
        }
    }

    #[test]
    fn silver_has_one_intermediate_return() {
        let a = AlphaHandle::Quadratic(QuadraticIrrational::constant(2));
        for n in 1..4 {
            let r = intermediate_return_times(&a, n).unwrap();
            assert_eq!(r.count, 1);
            assert_eq!(r.count_by_a_n, 1);
        }
    }

    #[test]
    fn intermediate_out_of_range() {
        let a = AlphaHandle::Rational { p: 1, q: 3 };
        assert!(matches!(
            intermediate_return_times(&a, 0),
            Err(CfracError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn csv_table_has_header() {
        let cf = expand_rational(5, 12).unwrap();
        let csv = cf.convergent_table_csv();
        assert!(csv.starts_with("n,a_n,p_n,q_n\n0,0,0,1\n"));
        assert!(csv.ends_with("3,2,5,12\n"));
    }
}
