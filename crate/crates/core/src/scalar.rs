//! Scalar arithmetic in two modes: exact rationals and 64-bit floats.
//!
//! All tensor formulas in this crate are written once, generically over
//! [`Field`]. The exact instantiation (`BigRational`) is the default for
//! rational-polynomial data; the float instantiation exists for coefficient
//! fields involving `sin`, `cos`, `exp` or `log`. The two modes never mix
//! inside a computation; promotion from exact to float is an explicit step
//! at the boundary ([`Scalar::to_f64`], [`Field::from_rational`]).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::EvalError;

/// Arithmetic mode of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "float")]
    Float,
}

/// The scalar operations every tensor formula needs.
///
/// Implemented by `BigRational` (exact mode) and `f64` (float mode).
/// Transcendental functions are only available in float mode; the exact
/// implementation reports [`EvalError::TranscendentalInExactMode`], which
/// callers avoid by choosing the mode from the expression upfront.
pub trait Field: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Division, with a domain error on a zero divisor.
    fn div(&self, rhs: &Self) -> Result<Self, EvalError>;

    fn is_zero(&self) -> bool;
    /// Zero test at a tolerance: exact zero in exact mode, `|x| <= tol` in
    /// float mode.
    fn is_zero_within(&self, tol: f64) -> bool;
    fn to_f64(&self) -> f64;
    /// Lifts the value into a constant expression, keeping exact values
    /// exact.
    fn to_expression(&self) -> crate::expr::Expression;

    fn sin(&self) -> Result<Self, EvalError>;
    fn cos(&self) -> Result<Self, EvalError>;
    fn exp(&self) -> Result<Self, EvalError>;
    /// Natural logarithm; domain error for non-positive arguments.
    fn ln(&self) -> Result<Self, EvalError>;
}

impl Field for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if Zero::is_zero(rhs) {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_zero_within(&self, _tol: f64) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_expression(&self) -> crate::expr::Expression {
        crate::expr::Expression::constant(self.clone())
    }

    fn sin(&self) -> Result<Self, EvalError> {
        Err(EvalError::TranscendentalInExactMode)
    }
    fn cos(&self) -> Result<Self, EvalError> {
        Err(EvalError::TranscendentalInExactMode)
    }
    fn exp(&self) -> Result<Self, EvalError> {
        Err(EvalError::TranscendentalInExactMode)
    }
    fn ln(&self) -> Result<Self, EvalError> {
        Err(EvalError::TranscendentalInExactMode)
    }
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if *rhs == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_zero_within(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_expression(&self) -> crate::expr::Expression {
        crate::expr::Expression::float(*self)
    }

    fn sin(&self) -> Result<Self, EvalError> {
        Ok(f64::sin(*self))
    }
    fn cos(&self) -> Result<Self, EvalError> {
        Ok(f64::cos(*self))
    }
    fn exp(&self) -> Result<Self, EvalError> {
        Ok(f64::exp(*self))
    }
    fn ln(&self) -> Result<Self, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::LogOfNonPositive);
        }
        Ok(f64::ln(*self))
    }
}

/// A scalar value at the I/O boundary: either an exact rational in lowest
/// terms or a 64-bit float. Arithmetic lives on [`Field`]; `Scalar` only
/// carries values in and out of the generic pipelines.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn from_int(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    /// Explicit promotion to float.
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ToPrimitive::to_f64(r).unwrap_or(f64::NAN),
            Scalar::Float(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.denom() == &BigInt::from(1) {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => serializer.serialize_str(&self.to_string()),
            Scalar::Float(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::String(s) => parse_exact(&s)
                .map(Scalar::Exact)
                .ok_or_else(|| D::Error::custom(format!("invalid rational literal {s:?}"))),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Scalar::from_int(i))
                } else {
                    n.as_f64()
                        .map(Scalar::Float)
                        .ok_or_else(|| D::Error::custom("number out of range"))
                }
            }
            other => Err(D::Error::custom(format!(
                "expected a number or \"p/q\" string, got {other}"
            ))),
        }
    }
}

/// Parses `p` or `p/q` with an optional leading minus sign.
pub fn parse_exact(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}
