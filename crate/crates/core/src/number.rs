//! Exact numeric literals.
//!
//! Literals in model files are kept as exact rationals. The float value used
//! by floating carriers is a function of the exact value alone: terminating
//! decimals go through the correctly rounded decimal parser, everything else
//! through rational division.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Number(BigRational);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("`{0}` is not a number")]
pub struct NumberParseError(pub String);

impl Number {
    pub fn new(r: BigRational) -> Self {
        Number(r)
    }

    pub fn from_int(i: i64) -> Self {
        Number(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Number(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Number(BigRational::zero())
    }

    pub fn one() -> Self {
        Number(BigRational::one())
    }

    /// The exact value of a finite float. Uses the shortest decimal that
    /// round-trips, so `0.7` becomes `7/10` rather than its binary expansion.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        format!("{x:?}").parse().ok()
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if is_terminating(self.0.denom()) {
            decimal_string(&self.0)
                .parse()
                .expect("decimal expansion parses")
        } else {
            self.0.to_f64().unwrap_or(f64::NAN)
        }
    }
}

fn is_terminating(den: &BigInt) -> bool {
    let mut d = den.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_even() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Exact decimal expansion of a rational whose denominator is 2^a·5^b.
fn decimal_string(r: &BigRational) -> String {
    let neg = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().clone();
    let int_part = &num / &den;
    let mut rem = &num % &den;
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int_part.to_string());
    if !rem.is_zero() {
        s.push('.');
        let ten = BigInt::from(10);
        while !rem.is_zero() {
            rem *= &ten;
            let digit = &rem / &den;
            s.push_str(&digit.to_string());
            rem %= &den;
        }
    }
    s
}

impl fmt::Display for Number {
    /// Integers print plainly, terminating fractions as exact decimals, and
    /// the rest as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_terminating(self.0.denom()) {
            f.write_str(&decimal_string(&self.0))
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Number {
    type Err = NumberParseError;

    /// Accepts `-12`, `3.25`, `1e-3`, `-2.5E+4` and `p/q`.
    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let err = || NumberParseError(src.to_string());
        let s = src.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: Number = n.parse().map_err(|_| err())?;
            let d: Number = d.parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Number(n.0 / d.0));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (mantissa, exp) = match body.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = body[i + 1..].parse().map_err(|_| err())?;
                (&body[..i], e)
            }
            None => (body, 0),
        };
        let (int_digits, frac_digits) = match mantissa.split_once('.') {
            Some((a, b)) => (a, b),
            None => (mantissa, ""),
        };
        if int_digits.is_empty() && frac_digits.is_empty() {
            return Err(err());
        }
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || !frac_digits.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        if exp.unsigned_abs() > 10_000 {
            return Err(err());
        }
        let digits = format!("{int_digits}{frac_digits}");
        let mut value = BigRational::from_integer(digits.parse::<BigInt>().map_err(|_| err())?);
        let scale = exp - frac_digits.len() as i64;
        let ten = BigRational::from_integer(BigInt::from(10));
        let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
        if scale >= 0 {
            value *= factor;
        } else {
            value /= factor;
        }
        if neg {
            value = -value;
        }
        Ok(Number(value))
    }
}

impl From<i64> for Number {
    fn from(i: i64) -> Self {
        Number::from_int(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exactly() {
        assert_eq!("0.5".parse::<Number>().unwrap(), Number::ratio(1, 2));
        assert_eq!("-3/6".parse::<Number>().unwrap(), Number::ratio(-1, 2));
        assert_eq!("1e-3".parse::<Number>().unwrap(), Number::ratio(1, 1000));
        assert_eq!("2.5E+2".parse::<Number>().unwrap(), Number::from_int(250));
        assert_eq!(".25".parse::<Number>().unwrap(), Number::ratio(1, 4));
        assert!("1/0".parse::<Number>().is_err());
        assert!("abc".parse::<Number>().is_err());
        assert!("".parse::<Number>().is_err());
        assert!("1e".parse::<Number>().is_err());
    }

    #[test]
    fn canonical_text() {
        assert_eq!(Number::ratio(1, 2).to_string(), "0.5");
        assert_eq!(Number::ratio(-7, 1).to_string(), "-7");
        assert_eq!(Number::ratio(2, 3).to_string(), "2/3");
        assert_eq!(Number::ratio(-1, 8).to_string(), "-0.125");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.7, -1.25e-17, 3.0, 0.1 + 0.2, 1e300, f64::MIN_POSITIVE, 0.644217687237691] {
            let n = Number::from_f64(x).unwrap();
            assert_eq!(n.to_f64(), x);
            let back: Number = n.to_string().parse().unwrap();
            assert_eq!(back, n);
        }
        assert!(Number::from_f64(f64::NAN).is_none());
        assert!((Number::ratio(1, 3).to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }
}
