//! Exact scalar arithmetic over the field Q(sqrt5).
//!
//! All coordinates, lengths and densities in this crate live in Q(sqrt5),
//! represented as `p + q*sqrt5` with rational `p`, `q`. Comparisons are
//! decided by exact sign analysis on the rational parts, never by floating
//! point. The golden ratio `phi = (1+sqrt5)/2` and its algebraic conjugate
//! `phi* = (1-sqrt5)/2` are the generators used by the Fibonacci
//! cut-and-project machinery.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::{Error, Result};

/// Scalar abstraction the geometry kernels are generic over.
///
/// `Quad` is the exact instance used by the point-set machinery; `f64` is
/// the floating instance used by the Monte Carlo / grid estimators and by
/// cross-checking tests.
pub trait Scalar: Clone + PartialOrd + Signed + fmt::Debug + fmt::Display + 'static {
    fn from_int(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether arithmetic on this type is exact (no rounding).
    fn exact_arithmetic() -> bool;
    fn half(&self) -> Self {
        self.clone() / Self::from_int(2)
    }
    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn exact_arithmetic() -> bool {
        false
    }
}

/// Exact element of Q(sqrt5): `p + q*sqrt5` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    p: BigRational,
    q: BigRational,
}

const SQRT5_F64: f64 = 2.236_067_977_499_79_f64;

impl Quad {
    pub fn new(p: BigRational, q: BigRational) -> Self {
        Quad { p, q }
    }

    pub fn from_rational(p: BigRational) -> Self {
        Quad {
            p,
            q: BigRational::zero(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Quad::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Quad::from_rational(BigRational::from_integer(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Quad::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `num/den + qnum/qden * sqrt5`
    pub fn quad_ratio(num: i64, den: i64, qnum: i64, qden: i64) -> Self {
        assert!(den != 0 && qden != 0, "zero denominator");
        Quad {
            p: BigRational::new(BigInt::from(num), BigInt::from(den)),
            q: BigRational::new(BigInt::from(qnum), BigInt::from(qden)),
        }
    }

    pub fn sqrt5() -> Self {
        Quad {
            p: BigRational::zero(),
            q: BigRational::one(),
        }
    }

    /// The golden ratio phi = (1+sqrt5)/2.
    pub fn phi() -> Self {
        Quad::quad_ratio(1, 2, 1, 2)
    }

    /// The conjugate phi* = (1-sqrt5)/2.
    pub fn phi_conj() -> Self {
        Quad::quad_ratio(1, 2, -1, 2)
    }

    /// Exact rational made from the binary expansion of an f64.
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        let r = BigRational::from_float(x)
            .ok_or_else(|| Error::InvalidParameter(format!("non-finite float {x}")))?;
        Ok(Quad::from_rational(r))
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.p
    }

    pub fn sqrt5_part(&self) -> &BigRational {
        &self.q
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    /// Galois conjugate: p - q*sqrt5.
    pub fn conjugate(&self) -> Self {
        Quad {
            p: self.p.clone(),
            q: -self.q.clone(),
        }
    }

    /// Exact sign: -1, 0 or +1. Decided by rational arithmetic alone:
    /// for mixed signs of p and q the sign of `p + q*sqrt5` follows from
    /// comparing p^2 with 5 q^2.
    pub fn sign(&self) -> i32 {
        let ps = sign_of(&self.p);
        let qs = sign_of(&self.q);
        match (ps, qs) {
            (0, 0) => 0,
            (s, 0) | (0, s) => s,
            (a, b) if a == b => a,
            (a, _) => {
                let p2 = &self.p * &self.p;
                let q2 = &self.q * &self.q * BigRational::from_integer(BigInt::from(5));
                // sqrt5 irrational: p^2 == 5 q^2 is impossible for p,q != 0
                match p2.cmp(&q2) {
                    Ordering::Greater => a,
                    Ordering::Less => -a,
                    Ordering::Equal => unreachable!("sqrt5 is irrational"),
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Largest integer <= self, exact.
    pub fn floor_int(&self) -> BigInt {
        if self.q.is_zero() {
            return self.p.floor().to_integer();
        }
        let mut g = BigInt::from_f64(self.to_f64().floor()).unwrap_or_else(BigInt::zero);
        loop {
            let gq = Quad::from_bigint(g.clone());
            if &gq > self {
                g -= 1;
                continue;
            }
            let g1 = Quad::from_bigint(&g + 1);
            if &g1 <= self {
                g += 1;
                continue;
            }
            return g;
        }
    }

    pub fn ceil_int(&self) -> BigInt {
        -(-self.clone()).floor_int()
    }

    pub fn to_f64(&self) -> f64 {
        self.p.to_f64().unwrap_or(f64::NAN) + self.q.to_f64().unwrap_or(f64::NAN) * SQRT5_F64
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = Quad::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for Quad {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quad {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.clone() - other.clone()).sign() {
            s if s < 0 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl Add for Quad {
    type Output = Quad;
    fn add(self, rhs: Quad) -> Quad {
        Quad {
            p: self.p + rhs.p,
            q: self.q + rhs.q,
        }
    }
}

impl Sub for Quad {
    type Output = Quad;
    fn sub(self, rhs: Quad) -> Quad {
        Quad {
            p: self.p - rhs.p,
            q: self.q - rhs.q,
        }
    }
}

impl Mul for Quad {
    type Output = Quad;
    fn mul(self, rhs: Quad) -> Quad {
        let five = BigRational::from_integer(BigInt::from(5));
        Quad {
            p: &self.p * &rhs.p + &five * &self.q * &rhs.q,
            q: &self.p * &rhs.q + &self.q * &rhs.p,
        }
    }
}

impl Div for Quad {
    type Output = Quad;
    fn div(self, rhs: Quad) -> Quad {
        // 1/(p + q sqrt5) = (p - q sqrt5) / (p^2 - 5 q^2)
        let five = BigRational::from_integer(BigInt::from(5));
        let norm = &rhs.p * &rhs.p - &five * &rhs.q * &rhs.q;
        assert!(!norm.is_zero(), "division by zero in Q(sqrt5)");
        let inv = Quad {
            p: &rhs.p / &norm,
            q: -(&rhs.q / &norm),
        };
        self * inv
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad {
            p: -self.p,
            q: -self.q,
        }
    }
}

impl std::ops::Rem for Quad {
    type Output = Quad;
    fn rem(self, rhs: Quad) -> Quad {
        // field: remainder after integer-quotient floor division
        let q = (self.clone() / rhs.clone()).floor_int();
        self - rhs * Quad::from_bigint(q)
    }
}

impl Zero for Quad {
    fn zero() -> Self {
        Quad::from_int(0)
    }
    fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }
}

impl One for Quad {
    fn one() -> Self {
        Quad::from_int(1)
    }
}

impl Num for Quad {
    type FromStrRadixErr = Error;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self> {
        if radix != 10 {
            return Err(Error::Parse("only radix 10 supported".into()));
        }
        s.parse()
    }
}

impl Signed for Quad {
    fn abs(&self) -> Self {
        Quad::abs(self)
    }
    fn abs_sub(&self, other: &Self) -> Self {
        let d = self.clone() - other.clone();
        if d.sign() > 0 {
            d
        } else {
            Quad::zero()
        }
    }
    fn signum(&self) -> Self {
        Quad::from_int(self.sign() as i64)
    }
    fn is_positive(&self) -> bool {
        self.sign() > 0
    }
    fn is_negative(&self) -> bool {
        self.sign() < 0
    }
}

impl Scalar for Quad {
    fn from_int(v: i64) -> Self {
        Quad::from_int(v)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Quad::ratio(num, den)
    }
    fn to_f64(&self) -> f64 {
        Quad::to_f64(self)
    }
    fn exact_arithmetic() -> bool {
        true
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Quad {
    /// Canonical literal form: `p/q`, `r/s*sqrt5` or `p/q+r/s*sqrt5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            return write!(f, "{}", fmt_rational(&self.p));
        }
        let qpart = format!("{}*sqrt5", fmt_rational(&self.q.abs()));
        if self.p.is_zero() {
            if self.q.is_negative() {
                return write!(f, "-{qpart}");
            }
            return write!(f, "{qpart}");
        }
        let joiner = if self.q.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}", fmt_rational(&self.p), joiner, qpart)
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|e| Error::Parse(format!("bad numerator {num:?}: {e}")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|e| Error::Parse(format!("bad denominator {den:?}: {e}")))?;
        if d.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(BigRational::new(n, d))
    } else if let Some((int, frac)) = s.split_once('.') {
        // decimal literal, parsed exactly in base 10
        let neg = int.trim_start().starts_with('-');
        let int_part = BigInt::from_str(if int.is_empty() { "0" } else { int })
            .map_err(|e| Error::Parse(format!("bad decimal {s:?}: {e}")))?;
        let digits = frac.trim();
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {s:?}")));
        }
        let scale = BigInt::from(10u32).pow(digits.len() as u32);
        let frac_num = if digits.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(digits).unwrap()
        };
        let frac_part = BigRational::new(if neg { -frac_num } else { frac_num }, scale);
        Ok(BigRational::from_integer(int_part) + frac_part)
    } else {
        let n =
            BigInt::from_str(s).map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))?;
        Ok(BigRational::from_integer(n))
    }
}

impl FromStr for Quad {
    type Err = Error;

    /// Parses `p/q`, decimal literals, `r/s*sqrt5`, `sqrt5`, and sums like
    /// `p/q+r/s*sqrt5` or `p/q-r/s*sqrt5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty scalar literal".into()));
        }
        // split at the last top-level '+' or '-' that is not a leading sign
        let bytes = s.as_bytes();
        let mut split_at = None;
        for i in (1..bytes.len()).rev() {
            let c = bytes[i] as char;
            if (c == '+' || c == '-') && bytes[i - 1] as char != '/' && bytes[i - 1] as char != '*'
            {
                split_at = Some(i);
                break;
            }
        }
        let (rat_str, quad_str) = match split_at {
            Some(i) if s[i..].contains("sqrt5") => (&s[..i], &s[i..]),
            _ => {
                if s.contains("sqrt5") {
                    ("", s)
                } else {
                    (s, "")
                }
            }
        };
        let p = if rat_str.is_empty() {
            BigRational::zero()
        } else {
            parse_rational(rat_str)?
        };
        let q = if quad_str.is_empty() {
            BigRational::zero()
        } else {
            let t = quad_str.trim();
            let (sign, t) = match t.strip_prefix('-') {
                Some(rest) => (-1, rest),
                None => (1, t.strip_prefix('+').unwrap_or(t)),
            };
            let coeff = match t.trim().strip_suffix("sqrt5") {
                Some(pre) => {
                    let pre = pre.trim().strip_suffix('*').unwrap_or(pre).trim();
                    if pre.is_empty() {
                        BigRational::one()
                    } else {
                        parse_rational(pre)?
                    }
                }
                None => return Err(Error::Parse(format!("bad sqrt5 term {quad_str:?}"))),
            };
            if sign < 0 {
                -coeff
            } else {
                coeff
            }
        };
        Ok(Quad { p, q })
    }
}

impl Serialize for Quad {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Quad {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sign of `a + b*sqrt5` for integer coefficients without allocation.
/// Coefficients must stay below ~2^62 so the squares fit in i128.
pub fn quad_sign_i128(a: i128, b: i128) -> i32 {
    let sa = a.signum() as i32;
    let sb = b.signum() as i32;
    match (sa, sb) {
        (0, 0) => 0,
        (s, 0) | (0, s) => s,
        (x, y) if x == y => x,
        (x, _) => {
            let a2 = a.checked_mul(a).expect("quad_sign_i128 overflow");
            let b2 = b
                .checked_mul(b)
                .and_then(|v| v.checked_mul(5))
                .expect("quad_sign_i128 overflow");
            match a2.cmp(&b2) {
                Ordering::Greater => x,
                Ordering::Less => -x,
                Ordering::Equal => 0,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_analysis_is_exact() {
        // phi^2 = phi + 1
        let phi = Quad::phi();
        assert_eq!(phi.clone() * phi.clone(), phi.clone() + Quad::one());
        // phi * phi_conj = -1
        assert_eq!(Quad::phi() * Quad::phi_conj(), -Quad::one());
        // 161/72 < sqrt5 < 2889/1292 (continued fraction convergents)
        assert!(Quad::ratio(161, 72) < Quad::sqrt5());
        assert!(Quad::sqrt5() < Quad::ratio(2889, 1292));
        assert_eq!((Quad::phi() - Quad::phi()).sign(), 0);
    }

    #[test]
    fn floor_of_quad_values() {
        assert_eq!(Quad::phi().floor_int(), BigInt::from(1));
        assert_eq!((-Quad::phi()).floor_int(), BigInt::from(-2));
        assert_eq!(Quad::ratio(7, 2).floor_int(), BigInt::from(3));
        assert_eq!(Quad::ratio(-7, 2).floor_int(), BigInt::from(-4));
        assert_eq!(Quad::from_int(5).floor_int(), BigInt::from(5));
        let x = Quad::phi().powi(10); // ~122.99
        assert_eq!(x.floor_int(), BigInt::from(122));
    }

    #[test]
    fn division_is_exact() {
        let x = Quad::quad_ratio(3, 7, -2, 5);
        let y = Quad::quad_ratio(-1, 3, 4, 9);
        let z = x.clone() / y.clone();
        assert_eq!(z * y, x);
    }

    #[test]
    fn literal_round_trip() {
        for s in [
            "0",
            "-3",
            "5/2",
            "-7/3",
            "1/2+1/2*sqrt5",
            "1/2-1/2*sqrt5",
            "3/4*sqrt5",
            "-1/10*sqrt5",
            "2+sqrt5",
        ] {
            let v: Quad = s.parse().unwrap();
            let again: Quad = v.to_string().parse().unwrap();
            assert_eq!(v, again, "round trip failed for {s}");
        }
        assert_eq!("1/2+1/2*sqrt5".parse::<Quad>().unwrap(), Quad::phi());
        assert_eq!("0.25".parse::<Quad>().unwrap(), Quad::ratio(1, 4));
        assert_eq!("-1.5".parse::<Quad>().unwrap(), Quad::ratio(-3, 2));
        assert!("sqrt7".parse::<Quad>().is_err());
        assert!("1/0".parse::<Quad>().is_err());
    }

    #[test]
    fn from_f64_is_exact_binary() {
        let v = Quad::from_f64_exact(0.5).unwrap();
        assert_eq!(v, Quad::ratio(1, 2));
        let v = Quad::from_f64_exact(0.1).unwrap();
        // 0.1 is not exactly representable; the conversion keeps the f64's value
        assert_eq!(v.to_f64(), 0.1);
        assert!(v != Quad::ratio(1, 10));
    }

    #[test]
    fn i128_sign_matches_bigrational_sign() {
        for a in -30i128..=30 {
            for b in -30i128..=30 {
                let q = Quad::new(
                    BigRational::from_integer(BigInt::from(a)),
                    BigRational::from_integer(BigInt::from(b)),
                );
                assert_eq!(quad_sign_i128(a, b), q.sign(), "a={a} b={b}");
            }
        }
    }
}
