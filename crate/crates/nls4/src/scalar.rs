//! Coefficients with an optional exact view, and the scalar types multipliers
//! evaluate into.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio, Rational64};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real coefficient that remembers its exact rational value when it has one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coef {
    value: f64,
    exact: Option<Rational64>,
}

impl Coef {
    pub const ZERO: Coef = Coef {
        value: 0.0,
        exact: Some(Ratio::new_raw(0, 1)),
    };

    pub fn int(n: i64) -> Self {
        Coef {
            value: n as f64,
            exact: Some(Ratio::from_integer(n)),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        let r = Ratio::new(num, den);
        Coef {
            value: *r.numer() as f64 / *r.denom() as f64,
            exact: Some(r),
        }
    }

    /// A float-only coefficient. Short binary fractions (denominator at most
    /// 2^20) keep an exact view, so `0.5` or `4.0` still work in exact checks.
    pub fn real(x: f64) -> Self {
        Coef {
            value: x,
            exact: dyadic(x),
        }
    }

    /// Drops the exact view even when one exists.
    pub fn inexact(x: f64) -> Self {
        Coef {
            value: x,
            exact: None,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Rational64> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_zero(&self) -> bool {
        match self.exact {
            Some(r) => r.is_zero(),
            None => self.value == 0.0,
        }
    }

    fn combine(
        self,
        other: Coef,
        f: impl Fn(f64, f64) -> f64,
        g: impl Fn(&Rational64, &Rational64) -> Option<Rational64>,
    ) -> Coef {
        let exact = match (self.exact, other.exact) {
            (Some(a), Some(b)) => g(&a, &b),
            _ => None,
        };
        let value = match exact {
            Some(r) => *r.numer() as f64 / *r.denom() as f64,
            None => f(self.value, other.value),
        };
        Coef { value, exact }
    }
}

fn dyadic(x: f64) -> Option<Rational64> {
    if !x.is_finite() {
        return None;
    }
    let scaled = x * (1u64 << 20) as f64;
    if scaled.fract() != 0.0 || scaled.abs() >= 9.0e15 {
        return None;
    }
    Some(Ratio::new(scaled as i64, 1 << 20))
}

impl Add for Coef {
    type Output = Coef;
    fn add(self, o: Coef) -> Coef {
        self.combine(o, |a, b| a + b, |a, b| a.checked_add(b))
    }
}

impl Sub for Coef {
    type Output = Coef;
    fn sub(self, o: Coef) -> Coef {
        self.combine(o, |a, b| a - b, |a, b| a.checked_sub(b))
    }
}

impl Mul for Coef {
    type Output = Coef;
    fn mul(self, o: Coef) -> Coef {
        self.combine(o, |a, b| a * b, |a, b| a.checked_mul(b))
    }
}

impl Neg for Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef {
            value: -self.value,
            exact: self.exact.map(|r| -r),
        }
    }
}

impl From<i64> for Coef {
    fn from(n: i64) -> Self {
        Coef::int(n)
    }
}

impl From<f64> for Coef {
    fn from(x: f64) -> Self {
        Coef::real(x)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl std::str::FromStr for Coef {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let d: i64 = d.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            if d == 0 {
                return Err(format!("{s}: zero denominator"));
            }
            return Ok(Coef::ratio(n, d));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(Coef::int(n));
        }
        s.parse::<f64>()
            .map(Coef::real)
            .map_err(|e| format!("{s}: {e}"))
    }
}

impl Serialize for Coef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.exact {
            Some(r) if !r.is_integer() => s.serialize_str(&self.to_string()),
            Some(r) => s.serialize_i64(*r.numer()),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Coef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Coef::int(n)),
            Raw::Float(x) => Ok(Coef::real(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Exact rational that stays on 128-bit integers until an operation
/// overflows, then continues on big integers.
#[derive(Clone, Debug)]
pub enum Rational {
    Small(Ratio<i128>),
    Big(BigRational),
}

impl Rational {
    pub fn from_int(n: i128) -> Self {
        Rational::Small(Ratio::from_integer(n))
    }

    pub fn new(num: i128, den: i128) -> Self {
        Rational::Small(Ratio::new(num, den))
    }

    pub fn from_big(r: BigRational) -> Self {
        Rational::Big(r)
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(r) => {
                BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Rational::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_zero(),
            Rational::Big(r) => r.is_zero(),
        }
    }

    pub fn abs(&self) -> Rational {
        match self {
            Rational::Small(r) => Rational::Small(r.abs()),
            Rational::Big(r) => Rational::Big(r.abs()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(r) => r.to_f64().unwrap_or(f64::NAN),
            Rational::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    fn binary(
        &self,
        o: &Rational,
        small: impl Fn(&Ratio<i128>, &Ratio<i128>) -> Option<Ratio<i128>>,
        big: impl Fn(BigRational, BigRational) -> BigRational,
    ) -> Rational {
        if let (Rational::Small(a), Rational::Small(b)) = (self, o) {
            if let Some(r) = small(a, b) {
                return Rational::Small(r);
            }
        }
        Rational::Big(big(self.to_big(), o.to_big()))
    }
}

impl PartialEq for Rational {
    fn eq(&self, o: &Rational) -> bool {
        match (self, o) {
            (Rational::Small(a), Rational::Small(b)) => a == b,
            _ => self.to_big() == o.to_big(),
        }
    }
}

impl Eq for Rational {}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(r) => write!(f, "{r}"),
            Rational::Big(r) => write!(f, "{r}"),
        }
    }
}

/// Arithmetic needed to evaluate multiplier trees.
pub trait Scalar: Clone + Send + Sync + fmt::Debug + 'static {
    fn zero() -> Self;
    fn from_int(n: i128) -> Self;
    /// Panics on a float-only coefficient in exact mode; callers check
    /// [`Coef::is_exact`] up front.
    fn from_coef(c: &Coef) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// `a + g b` for integer `a`, `b`.
    fn affine(a: i128, b: i128, g: &Coef) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Reciprocal of a non-zero value.
    fn recip(&self) -> Self;
    fn div_int(&self, d: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_int(n: i128) -> Self {
        n as f64
    }
    fn from_coef(c: &Coef) -> Self {
        c.value()
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }
    fn affine(a: i128, b: i128, g: &Coef) -> Self {
        if b == 0 {
            return a as f64;
        }
        if let Some(r) = g.exact() {
            // exact when it fits, so resonant zeros stay zero
            let (n, d) = (*r.numer() as i128, *r.denom() as i128);
            if let Some(num) = a
                .checked_mul(d)
                .and_then(|ad| n.checked_mul(b).and_then(|nb| ad.checked_add(nb)))
            {
                return num as f64 / d as f64;
            }
        }
        a as f64 + g.value() * b as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn div_int(&self, d: i64) -> Self {
        self / d as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::from_int(0)
    }
    fn from_int(n: i128) -> Self {
        Rational::from_int(n)
    }
    fn from_coef(c: &Coef) -> Self {
        let r = c
            .exact()
            .expect("exact evaluation needs rational coefficients");
        Rational::new(*r.numer() as i128, *r.denom() as i128)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn affine(a: i128, b: i128, g: &Coef) -> Self {
        Rational::from_int(a).add(&Rational::from_int(b).mul(&Rational::from_coef(g)))
    }
    fn add(&self, o: &Self) -> Self {
        self.binary(o, |a, b| a.checked_add(b), |a, b| a + b)
    }
    fn sub(&self, o: &Self) -> Self {
        self.binary(o, |a, b| a.checked_sub(b), |a, b| a - b)
    }
    fn mul(&self, o: &Self) -> Self {
        self.binary(o, |a, b| a.checked_mul(b), |a, b| a * b)
    }
    fn recip(&self) -> Self {
        match self {
            Rational::Small(r) => match Ratio::one().checked_div(r) {
                Some(x) => Rational::Small(x),
                None => Rational::Big(self.to_big().recip()),
            },
            Rational::Big(r) => Rational::Big(r.recip()),
        }
    }
    fn div_int(&self, d: i64) -> Self {
        self.mul(&Rational::new(1, d as i128))
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coef_keeps_exact_view() {
        let a = Coef::ratio(3, 2);
        let b = Coef::real(0.5);
        assert_eq!((a + b).exact(), Some(Ratio::from_integer(2)));
        assert!(Coef::real(0.1).exact().is_none());
        assert_eq!((Coef::int(2) * Coef::real(0.1)).exact(), None);
    }

    #[test]
    fn coef_parses_fractions() {
        let c: Coef = "-3/2".parse().unwrap();
        assert_eq!(c.exact(), Some(Ratio::new(-3, 2)));
        assert_eq!(c.to_string(), "-3/2");
    }

    #[test]
    fn rational_promotes_on_overflow() {
        let big = Rational::from_int(i128::MAX / 2);
        let sq = big.mul(&big);
        assert!(matches!(sq, Rational::Big(_)));
        let back = sq.mul(&big.recip()).mul(&big.recip());
        assert_eq!(back, Rational::from_int(1));
    }

    #[test]
    fn affine_is_exact_for_rational_gamma() {
        let g = Coef::ratio(-3, 2);
        assert!(<f64 as Scalar>::affine(3, 2, &g).abs() == 0.0);
        assert_eq!(Rational::affine(3, 2, &g), Rational::from_int(0));
    }
}
