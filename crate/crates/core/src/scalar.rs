//! Number types the library computes with.
//!
//! Everything is generic over [`Scalar`], implemented for [`Rational`]
//! (exact, arbitrary precision) and `f64`. Exact comparisons ignore the
//! tolerance argument; floating comparisons use it as an absolute bound.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serializer;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Absolute tolerance used for sums of weights in float mode.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance for operator identities in float mode.
pub const OPERATOR_TOLERANCE: f64 = 1e-9;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + PartialEq
    + Send
    + Sync
    + serde::Serialize
    + Zero
    + One
    + Signed
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;
    const MODE: &'static str;

    fn from_ratio(numer: i64, denom: i64) -> Self;
    fn from_usize(n: usize) -> Self;
    fn to_f64(&self) -> f64;
    /// Parses `"p/q"`, integers and decimal literals (with optional exponent).
    fn parse(text: &str) -> Result<Self>;
    /// `"p/q"` for exact values, shortest round-trip decimal for floats.
    fn render(&self) -> String;
    fn recip(&self) -> Self;

    fn close(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out *= other;
        out
    }

    fn add_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out += other;
        out
    }

    fn sub_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out -= other;
        out
    }

    fn div_ref(&self, other: &Self) -> Self {
        self.mul_ref(&other.recip())
    }

    /// True if strictly positive beyond the tolerance (floats) or exactly (rationals).
    fn is_strictly_positive(&self) -> bool {
        self > &Self::zero()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_usize(n: usize) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse(text: &str) -> Result<Self> {
        parse_rational(text)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn recip(&self) -> Self {
        num_rational::Ratio::recip(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| Error::Parse(text.to_string()))?;
            let d: f64 = d.trim().parse().map_err(|_| Error::Parse(text.to_string()))?;
            return Ok(n / d);
        }
        t.parse().map_err(|_| Error::Parse(text.to_string()))
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }

    fn recip(&self) -> Self {
        1.0 / self
    }
}

fn parse_rational(text: &str) -> Result<Rational> {
    let err = || Error::Parse(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..].parse().map_err(|_| err())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(&all_digits).map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

pub fn serialize<S: Scalar, Ser: Serializer>(value: &S, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    if S::EXACT {
        ser.serialize_str(&value.render())
    } else {
        ser.serialize_f64(value.to_f64())
    }
}

pub fn serialize_vec<S: Scalar, Ser: Serializer>(values: &[S], ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(values.len()))?;
    for v in values {
        if S::EXACT {
            seq.serialize_element(&v.render())?;
        } else {
            seq.serialize_element(&v.to_f64())?;
        }
    }
    seq.end()
}

/// JSON value for a scalar, matching [`serialize`].
pub fn to_json<S: Scalar>(value: &S) -> serde_json::Value {
    if S::EXACT {
        serde_json::Value::String(value.render())
    } else {
        serde_json::json!(value.to_f64())
    }
}

pub fn sum<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    let mut acc = S::zero();
    for v in values {
        acc += v;
    }
    acc
}

pub fn max_abs<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    let mut best = S::zero();
    for v in values {
        let a = v.abs();
        if a > best {
            best = a;
        }
    }
    best
}

/// Shannon entropy in nats of a family of masses (zero masses contribute nothing).
pub fn shannon_entropy<'a, S: Scalar>(masses: impl IntoIterator<Item = &'a S>) -> f64 {
    masses.into_iter().map(|m| m.to_f64()).filter(|&m| m > 0.0).map(|m| -m * m.ln()).sum()
}
