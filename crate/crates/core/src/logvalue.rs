//! Nonnegative extended reals stored as natural logarithms.
//!
//! Martingale values in a long run easily span `1e-25..1e20` and beyond, so
//! every merged quantity in this crate is a [`LogValue`]. Zero is `ln = -inf`,
//! infinity is `ln = +inf`; NaN is never stored.
//!
//! All transcendental functions go through `libm` so results do not depend on
//! the platform's C math library.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[0, +inf]` represented by its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);
    pub const INFINITY: LogValue = LogValue(f64::INFINITY);

    /// Wraps a natural logarithm. NaN is rejected.
    pub fn from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() {
            return Err(Error::Domain("log value is NaN".into()));
        }
        Ok(LogValue(ln))
    }

    /// Caller guarantees `ln` is not NaN.
    #[inline]
    pub(crate) fn from_ln_unchecked(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogValue(ln)
    }

    pub fn from_log10(log10: f64) -> Result<Self> {
        Self::from_ln(log10 * std::f64::consts::LN_10)
    }

    /// Converts a linear-scale value. Negative numbers and NaN are rejected.
    pub fn from_linear(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("{x} is not in [0, +inf]")));
        }
        Ok(LogValue(if x == f64::INFINITY {
            f64::INFINITY
        } else {
            libm::log(x)
        }))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn log10(self) -> f64 {
        self.0 / std::f64::consts::LN_10
    }

    /// Linear value; saturates to `0.0` or `inf` outside the `f64` range.
    pub fn to_linear(self) -> f64 {
        libm::exp(self.0)
    }

    /// Linear value, or `None` when it underflows to a subnormal/zero or
    /// overflows. Exact zero and exact infinity are returned as such.
    pub fn to_linear_checked(self) -> Option<f64> {
        if self.is_zero() {
            return Some(0.0);
        }
        if self.is_infinite() {
            return None;
        }
        let x = libm::exp(self.0);
        (x.is_finite() && x >= f64::MIN_POSITIVE).then_some(x)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Raises to a nonnegative real power (`0^0 = 1`).
    pub fn powf(self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return LogValue::ONE;
        }
        LogValue(self.0 * exponent)
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

/// `ln(exp(a) + exp(b))` for `a, b` in `[-inf, +inf]`.
#[inline]
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Log-sum-exp over a slice of natural logs.
pub(crate) fn ln_sum(terms: &[f64]) -> f64 {
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_infinite() {
        return hi;
    }
    let s: f64 = terms.iter().map(|&t| libm::exp(t - hi)).sum();
    hi + libm::log(s)
}

impl Eq for LogValue {}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: Self) -> Self {
        LogValue(ln_add(self.0, rhs.0))
    }
}

/// Zero absorbs: `0 * inf = 0`.
impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return LogValue::ZERO;
        }
        LogValue(self.0 + rhs.0)
    }
}

/// `x / 0 = inf` (including `0 / 0`); `x / inf = 0` (including `inf / inf`).
impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return LogValue::INFINITY;
        }
        if self.is_zero() || rhs.is_infinite() {
            return LogValue::ZERO;
        }
        LogValue(self.0 - rhs.0)
    }
}

impl Sum for LogValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let terms: Vec<f64> = iter.map(LogValue::ln).collect();
        LogValue(ln_sum(&terms))
    }
}

impl Product for LogValue {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(LogValue::ONE, |acc, v| acc * v)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_linear_checked() {
            Some(x) => write!(f, "{x:e}"),
            None if self.is_infinite() => f.write_str("inf"),
            None => write!(f, "10^{}", self.log10()),
        }
    }
}

/// JSON carries the natural log so that values survive a round trip bit for
/// bit; the infinities become the strings `"inf"` and `"-inf"`.
impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let ln = match Repr::deserialize(d)? {
            Repr::Num(x) => x,
            Repr::Str(s) => match s.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                other => return Err(serde::de::Error::custom(format!("bad log value {other:?}"))),
            },
        };
        LogValue::from_ln(ln).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(x: f64) -> LogValue {
        LogValue::from_linear(x).unwrap()
    }

    #[test]
    fn linear_round_trip() {
        for x in [1e-300, 1e-25, 0.5, 1.0, 3.0, 1e20, 1e300] {
            let back = lv(x).to_linear();
            assert!(((back - x) / x).abs() < 1e-12, "{x} -> {back}");
        }
        assert_eq!(lv(0.0).to_linear(), 0.0);
        assert_eq!(lv(f64::INFINITY), LogValue::INFINITY);
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(LogValue::from_linear(-1.0).is_err());
        assert!(LogValue::from_linear(f64::NAN).is_err());
        assert!(LogValue::from_ln(f64::NAN).is_err());
    }

    #[test]
    fn arithmetic() {
        assert!(((lv(2.0) + lv(3.0)).to_linear() - 5.0).abs() < 1e-14);
        assert!(((lv(2.0) * lv(3.0)).to_linear() - 6.0).abs() < 1e-14);
        assert_eq!(lv(0.0) + lv(3.0), lv(3.0));
        assert_eq!(LogValue::INFINITY + lv(3.0), LogValue::INFINITY);
        assert_eq!(LogValue::ZERO * LogValue::INFINITY, LogValue::ZERO);
        assert_eq!(LogValue::INFINITY * lv(2.0), LogValue::INFINITY);
    }

    #[test]
    fn ordering_and_extremes() {
        let mut v = vec![lv(3.0), LogValue::INFINITY, LogValue::ZERO, lv(1.0)];
        v.sort();
        assert_eq!(v, vec![LogValue::ZERO, lv(1.0), lv(3.0), LogValue::INFINITY]);
        assert_eq!(LogValue::from_ln(-1e5).unwrap().to_linear_checked(), None);
        assert_eq!(LogValue::ZERO.to_linear_checked(), Some(0.0));
    }

    #[test]
    fn sum_of_many_small_terms() {
        let s: LogValue = std::iter::repeat_n(LogValue::from_ln(-800.0).unwrap(), 1000).sum();
        assert!((s.ln() - (-800.0 + 1000f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let vals = [LogValue::ZERO, LogValue::INFINITY, lv(0.1), LogValue::ONE];
        let s = serde_json::to_string(&vals).unwrap();
        assert_eq!(s, r#"["-inf","inf",-2.3025850929940455,0.0]"#);
        let back: Vec<LogValue> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vals);
    }
}
