//! Scalar fields shared by the jet engine and the linear algebra layer.
//!
//! Two fields are supported: `f64` (floating mode) and [`Rational`]
//! (exact mode, arbitrary precision). Exact mode supports the field
//! operations and integer powers only; transcendental functions and `pi`
//! report [`ElementaryError::Inexact`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exprjet::Func;

/// Arbitrary-precision rational number used in exact mode.
pub type Rational = BigRational;

/// Why an elementary function could not be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementaryError {
    /// Argument outside the open real domain where the function is smooth.
    OutOfDomain,
    /// The result is not representable in the active field.
    Inexact,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for the exact rational field.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(value: i64) -> Self;
    /// Converts a decimal/scientific literal. Exact mode keeps every digit.
    fn from_literal(text: &str) -> Option<Self>;
    /// Nearest representable value; `None` for non-finite input in exact mode.
    fn from_f64(value: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn pi() -> Option<Self>;
    fn is_zero(&self) -> bool;

    fn abs(&self) -> Self {
        if self.to_f64() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `|self| <= tol * max(1, scale)` in floating mode, `self == 0` in exact mode.
    fn is_negligible(&self, tol: f64, scale: f64) -> bool;

    /// Value, first and second derivative of `func` at `x`.
    fn elementary(func: Func, x: &Self) -> Result<[Self; 3], ElementaryError>;

    /// False when the value overflowed (floating mode only).
    fn is_finite(&self) -> bool {
        true
    }

    /// Rendering used in reports: shortest round-trip for floats, `p/q` for rationals.
    fn to_report_string(&self) -> String;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(value: i64) -> Self {
        value as f64
    }
    fn from_literal(text: &str) -> Option<Self> {
        text.parse().ok()
    }
    fn from_f64(value: f64) -> Option<Self> {
        Some(value)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pi() -> Option<Self> {
        Some(std::f64::consts::PI)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_negligible(&self, tol: f64, scale: f64) -> bool {
        f64::abs(*self) <= tol * scale.max(1.0)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_report_string(&self) -> String {
        format!("{self:?}")
    }

    fn elementary(func: Func, x: &Self) -> Result<[Self; 3], ElementaryError> {
        use ElementaryError::OutOfDomain;
        let x = *x;
        let out = match func {
            Func::Sin => [x.sin(), x.cos(), -x.sin()],
            Func::Cos => [x.cos(), -x.sin(), -x.cos()],
            Func::Tan => {
                let c = x.cos();
                if c == 0.0 {
                    return Err(OutOfDomain);
                }
                let t = x.tan();
                let sec2 = 1.0 / (c * c);
                [t, sec2, 2.0 * sec2 * t]
            }
            Func::Sinh => [x.sinh(), x.cosh(), x.sinh()],
            Func::Cosh => [x.cosh(), x.sinh(), x.cosh()],
            Func::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                [t, d, -2.0 * t * d]
            }
            Func::Exp => {
                let e = x.exp();
                [e, e, e]
            }
            Func::Log => {
                if x <= 0.0 {
                    return Err(OutOfDomain);
                }
                [x.ln(), 1.0 / x, -1.0 / (x * x)]
            }
            Func::Sqrt => {
                if x <= 0.0 {
                    return Err(OutOfDomain);
                }
                let s = x.sqrt();
                [s, 0.5 / s, -0.25 / (s * x)]
            }
            Func::Asin | Func::Acos => {
                if x.abs() >= 1.0 {
                    return Err(OutOfDomain);
                }
                let w = 1.0 - x * x;
                let d = 1.0 / w.sqrt();
                let dd = x / (w * w.sqrt());
                if func == Func::Asin {
                    [x.asin(), d, dd]
                } else {
                    [x.acos(), -d, -dd]
                }
            }
            Func::Atan => {
                let w = 1.0 + x * x;
                [x.atan(), 1.0 / w, -2.0 * x / (w * w)]
            }
            Func::Asinh => {
                let w = 1.0 + x * x;
                [x.asinh(), 1.0 / w.sqrt(), -x / (w * w.sqrt())]
            }
            Func::Acosh => {
                if x <= 1.0 {
                    return Err(OutOfDomain);
                }
                let w = x * x - 1.0;
                [x.acosh(), 1.0 / w.sqrt(), -x / (w * w.sqrt())]
            }
            Func::Atanh => {
                if x.abs() >= 1.0 {
                    return Err(OutOfDomain);
                }
                let w = 1.0 - x * x;
                [x.atanh(), 1.0 / w, 2.0 * x / (w * w)]
            }
        };
        Ok(out)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn from_literal(text: &str) -> Option<Self> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(idx) => (&text[..idx], text[idx + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(idx) => (&mantissa[..idx], &mantissa[idx + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let numer: BigInt = digits.parse().ok()?;
        let shift = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
        Some(if shift >= 0 {
            BigRational::from_integer(numer * scale)
        } else {
            BigRational::new(numer, scale)
        })
    }

    fn from_f64(value: f64) -> Option<Self> {
        BigRational::from_float(value)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn pi() -> Option<Self> {
        None
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_negligible(&self, _tol: f64, _scale: f64) -> bool {
        Zero::is_zero(self)
    }
    fn to_report_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn elementary(_func: Func, _x: &Self) -> Result<[Self; 3], ElementaryError> {
        Err(ElementaryError::Inexact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(Rational::from_literal("0.1"), Some(q(1, 10)));
        assert_eq!(Rational::from_literal("2.5e-3"), Some(q(1, 400)));
        assert_eq!(Rational::from_literal("12E2"), Some(q(1200, 1)));
        assert_eq!(Rational::from_literal(".5"), Some(q(1, 2)));
        assert_eq!(Rational::from_literal("x"), None);
    }

    #[test]
    fn rational_report_format() {
        assert_eq!(q(-3, 6).to_report_string(), "-1/2");
        assert_eq!(q(4, 1).to_report_string(), "4/1");
    }

    #[test]
    fn elementary_derivatives_match_closed_forms() {
        let [v, d, dd] = f64::elementary(Func::Asinh, &1.0).unwrap();
        assert!((v - 1.0f64.asinh()).abs() < 1e-15);
        assert!((d - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((dd + 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-15);
        assert_eq!(f64::elementary(Func::Log, &0.0), Err(ElementaryError::OutOfDomain));
        assert_eq!(Rational::elementary(Func::Sin, &q(1, 2)), Err(ElementaryError::Inexact));
    }
}
