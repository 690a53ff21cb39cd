//! Scalar abstraction shared by the exact (rational) and floating-point paths.
//!
//! Everything that only needs field arithmetic (polynomials, piecewise
//! bodies, weights, linear solves, smoothing) is written against [`Scalar`].
//! Code that needs transcendental functions additionally asks for [`Real`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Field-like number type usable throughout the crate.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic on this type never rounds.
    const EXACT: bool;

    /// Exact rational value, `None` for NaN or infinities.
    fn to_rational(&self) -> Option<Rational>;

    /// Nearest representable value.
    fn from_rational(q: &Rational) -> Self;

    /// Relative tolerance used when certifying equalities; zero for exact types.
    fn certify_tolerance() -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer fits every scalar type")
    }

    fn ratio(p: i64, q: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(p), BigInt::from(q)))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts between scalar types through the exact rational value.
    fn cast<U: Scalar>(&self) -> Result<U> {
        if !Self::EXACT && !U::EXACT {
            if let Some(u) = self.to_f64().and_then(U::from_f64) {
                return Ok(u);
            }
        }
        self.to_rational()
            .map(|q| U::from_rational(&q))
            .ok_or_else(|| Error::Mode(format!("value {self} has no rational representation")))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_rational(&self) -> Option<Rational> {
        Rational::from_float(*self)
    }

    fn from_rational(q: &Rational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }

    fn certify_tolerance() -> f64 {
        1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn to_rational(&self) -> Option<Rational> {
        Rational::from_float(*self)
    }

    fn from_rational(q: &Rational) -> Self {
        q.to_f32().unwrap_or(f32::NAN)
    }

    fn certify_tolerance() -> f64 {
        1e-4
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn certify_tolerance() -> f64 {
        0.0
    }
}

/// Floating-point scalar with transcendental functions.
pub trait Real: Scalar + Float + FloatConst {}

impl<T: Scalar + Float + FloatConst> Real for T {}

/// Equality up to the scalar's certification tolerance, relative to `scale`.
pub fn certify_eq<T: Scalar>(a: &T, b: &T, scale: &T) -> bool {
    if T::EXACT {
        return a == b;
    }
    let diff = (a.clone() - b.clone()).abs().to_f64_lossy();
    let s = 1.0 + scale.abs().to_f64_lossy();
    diff <= T::certify_tolerance() * s
}

/// Parses `"p/q"`, integers, and decimal/scientific literals into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parameter(format!("cannot parse '{text}' as a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parameter(format!("zero denominator in '{text}'")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(all);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Formats a rational as `"p/q"` (or `"p"` for integers).
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `q` as an exact rational with integer numerator and denominator.
pub fn rational(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Converts a slice between scalar types.
pub fn cast_vec<T: Scalar, U: Scalar>(values: &[T]) -> Result<Vec<U>> {
    values.iter().map(|v| v.cast()).collect()
}

/// Zero test that works for every scalar.
pub fn is_zero<T: Scalar>(x: &T) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), rational(3, 4));
        assert_eq!(parse_rational("-12").unwrap(), rational(-12, 1));
        assert_eq!(parse_rational("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("1.5e-2").unwrap(), rational(3, 200));
        assert_eq!(parse_rational("2E3").unwrap(), rational(2000, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn rational_round_trip_through_f64_is_exact_for_dyadics() {
        let q: Rational = 0.375f64.to_rational().unwrap();
        assert_eq!(q, rational(3, 8));
        assert_eq!(f64::from_rational(&q), 0.375);
        let x: f32 = rational(1, 3).cast().unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn certify_eq_is_exact_for_rationals() {
        let a = rational(1, 3);
        let b = rational(1, 3) + rational(1, 1_000_000_000_000);
        assert!(!certify_eq(&a, &b, &a));
        assert!(certify_eq(&(1.0f64 / 3.0), &(1.0 / 3.0 + 1e-14), &1.0));
    }

    #[test]
    fn format_rational_omits_unit_denominator() {
        assert_eq!(format_rational(&rational(6, 3)), "2");
        assert_eq!(format_rational(&rational(-1, 4)), "-1/4");
    }
}
