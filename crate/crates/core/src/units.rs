//! Exact dimensional bookkeeping for a single base unit `ι`.
//!
//! `ι` is the unit of the base measure of the window (its hypervolume), so a
//! density on `X^n` carries `ι^-n` and a product of `n` volume elements
//! carries `ι^n`. Exponents are exact rationals: two quantities are
//! commensurable iff their reduced exponents are identical, never "close".

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Failures of unit-checked arithmetic. Each variant carries the offending
/// exponent(s) so reports can show them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("incommensurable sum: ι^{left} + ι^{right}")]
    IncommensurableSum { left: UnitExp, right: UnitExp },

    #[error("logarithm of a dimensional quantity (unit ι^{unit})")]
    DimensionalLog { unit: UnitExp },

    #[error("exponential of a dimensional quantity (unit ι^{unit})")]
    DimensionalExp { unit: UnitExp },

    #[error("logarithm of a non-positive value {value}")]
    NonpositiveLog { value: f64 },

    #[error("non-integer power of a non-positive base {value}")]
    NegativeBase { value: f64 },

    #[error("non-finite value {value}")]
    NonFinite { value: f64 },

    #[error("expected a unitless result, got unit ι^{unit}")]
    NotUnitless { unit: UnitExp },

    #[error("invalid rational exponent {text:?}")]
    BadRational { text: String },
}

/// A reduced rational exponent of `ι`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitExp(Rational64);

impl UnitExp {
    pub const ZERO: UnitExp = UnitExp(Rational64::new_raw(0, 1));
    pub const ONE: UnitExp = UnitExp(Rational64::new_raw(1, 1));

    /// Builds `numer/denom` in reduced form. Panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        UnitExp(Rational64::new(numer, denom))
    }

    pub fn integer(n: i64) -> Self {
        UnitExp(Rational64::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }

    pub fn is_integer(&self) -> bool {
        self.denom() == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn as_ratio(&self) -> Rational64 {
        self.0
    }
}

impl From<Rational64> for UnitExp {
    fn from(r: Rational64) -> Self {
        UnitExp(r)
    }
}

impl From<i64> for UnitExp {
    fn from(n: i64) -> Self {
        UnitExp::integer(n)
    }
}

impl Add for UnitExp {
    type Output = UnitExp;
    fn add(self, rhs: UnitExp) -> UnitExp {
        UnitExp(self.0 + rhs.0)
    }
}

impl Sub for UnitExp {
    type Output = UnitExp;
    fn sub(self, rhs: UnitExp) -> UnitExp {
        UnitExp(self.0 - rhs.0)
    }
}

impl Neg for UnitExp {
    type Output = UnitExp;
    fn neg(self) -> UnitExp {
        UnitExp(-self.0)
    }
}

impl Mul for UnitExp {
    type Output = UnitExp;
    fn mul(self, rhs: UnitExp) -> UnitExp {
        UnitExp(self.0 * rhs.0)
    }
}

/// Always rendered as `p/q`, including integers (`2/1`) and zero (`0/1`).
impl fmt::Display for UnitExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for UnitExp {
    type Err = UnitError;

    /// Accepts `p/q` or a bare integer `p`. A zero denominator is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnitError::BadRational { text: s.to_string() };
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let numer: i64 = n.parse().map_err(|_| bad())?;
        let denom: i64 = d.parse().map_err(|_| bad())?;
        if denom == 0 {
            return Err(bad());
        }
        Ok(UnitExp::new(numer, denom))
    }
}

impl Serialize for UnitExp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitExp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite real value carrying the exponent of `ι` it is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    value: f64,
    #[serde(rename = "unit_exponent")]
    unit: UnitExp,
}

impl Quantity {
    pub fn new(value: f64, unit: UnitExp) -> Result<Self, UnitError> {
        if !value.is_finite() {
            return Err(UnitError::NonFinite { value });
        }
        Ok(Quantity { value, unit })
    }

    pub fn unitless(value: f64) -> Result<Self, UnitError> {
        Quantity::new(value, UnitExp::ZERO)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> UnitExp {
        self.unit
    }

    pub fn is_unitless(&self) -> bool {
        self.unit.is_zero()
    }

    /// The plain real behind a unitless quantity; `None` for dimensional ones.
    pub fn as_unitless(&self) -> Option<f64> {
        self.is_unitless().then_some(self.value)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ι^({})", self.value, self.unit)
    }
}

/// The plain value of a quantity that must be unitless.
pub fn require_unitless(a: Quantity) -> Result<f64, UnitError> {
    if a.unit.is_zero() {
        Ok(a.value)
    } else {
        Err(UnitError::NotUnitless { unit: a.unit })
    }
}

/// Values multiply, exponents add.
pub fn mul(a: Quantity, b: Quantity) -> Quantity {
    let value = a.value * b.value;
    debug_assert!(value.is_finite(), "overflow in {a} * {b}");
    Quantity {
        value,
        unit: a.unit + b.unit,
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        mul(self, rhs)
    }
}

/// `a^e` with a rational exponent; the unit exponent scales by `e`.
pub fn pow(a: Quantity, e: UnitExp) -> Result<Quantity, UnitError> {
    let unit = a.unit * e;
    if e.is_zero() {
        return Ok(Quantity { value: 1.0, unit });
    }
    let value = if e.is_integer() {
        let k = e.numer();
        match i32::try_from(k) {
            Ok(k) => a.value.powi(k),
            Err(_) => a.value.powf(k as f64),
        }
    } else {
        if a.value <= 0.0 {
            return Err(UnitError::NegativeBase { value: a.value });
        }
        a.value.powf(e.to_f64())
    };
    Quantity::new(value, unit)
}

/// Sum of two quantities, defined only when their exponents are identical.
pub fn checked_add(a: Quantity, b: Quantity) -> Result<Quantity, UnitError> {
    if a.unit != b.unit {
        return Err(UnitError::IncommensurableSum {
            left: a.unit,
            right: b.unit,
        });
    }
    Quantity::new(a.value + b.value, a.unit)
}

/// Natural log; the argument must be unitless and positive.
pub fn checked_log(a: Quantity) -> Result<Quantity, UnitError> {
    if !a.unit.is_zero() {
        return Err(UnitError::DimensionalLog { unit: a.unit });
    }
    if a.value <= 0.0 {
        return Err(UnitError::NonpositiveLog { value: a.value });
    }
    Ok(Quantity {
        value: a.value.ln(),
        unit: UnitExp::ZERO,
    })
}

pub fn checked_exp(a: Quantity) -> Result<Quantity, UnitError> {
    if !a.unit.is_zero() {
        return Err(UnitError::DimensionalExp { unit: a.unit });
    }
    Quantity::new(a.value.exp(), UnitExp::ZERO)
}

/// Re-expresses `a` in a unit system `ι'` with `1 ι = k ι'`.
///
/// The numeric value scales by `k^unit`; the exponent is unchanged.
pub fn convert_unit_system(a: Quantity, k: f64) -> Quantity {
    assert!(k > 0.0 && k.is_finite(), "unit scale must be positive, got {k}");
    let value = if a.unit.is_zero() {
        a.value
    } else {
        a.value * k.powf(a.unit.to_f64())
    };
    Quantity {
        value,
        unit: a.unit,
    }
}

/// Sums a sequence through [`checked_add`]; an empty sequence is unitless zero.
pub fn checked_sum<I>(items: I) -> Result<Quantity, UnitError>
where
    I: IntoIterator<Item = Quantity>,
{
    let mut it = items.into_iter();
    let Some(mut acc) = it.next() else {
        return Ok(Quantity {
            value: 0.0,
            unit: UnitExp::ZERO,
        });
    };
    for q in it {
        acc = checked_add(acc, q)?;
    }
    Ok(acc)
}
