//! Exact probability scalars.
//!
//! [`Prob`] wraps an arbitrary-precision rational constrained to `[0, 1]`.
//! All arithmetic on it is exact; there is no rounding anywhere in this type.

use std::fmt;
use std::str::FromStr;

use num::bigint::{BigInt, Sign};
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An exact probability: a non-negative rational at most 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    /// Wraps a rational, rejecting values outside `[0, 1]`.
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::InvalidProbability {
                value: value.to_string(),
            });
        }
        Ok(Prob(value))
    }

    /// `numer / denom`, checked to lie in `[0, 1]`.
    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidProbability {
                value: format!("{numer}/0"),
            });
        }
        Self::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    /// Internal constructor for values already known to be valid probabilities.
    pub(crate) fn trusted(value: BigRational) -> Self {
        debug_assert!(!value.is_negative() && value <= BigRational::one());
        Prob(value)
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `1 - p`, always a valid probability.
    pub fn complement(&self) -> Self {
        Prob(BigRational::one() - &self.0)
    }

    /// Exact sum, rejecting results above 1.
    pub fn try_add(&self, other: &Prob) -> Result<Self> {
        Self::new(&self.0 + &other.0)
    }

    /// Exact product; probabilities are closed under multiplication.
    pub fn mul(&self, other: &Prob) -> Self {
        Prob(&self.0 * &other.0)
    }

    /// Exact non-negative integer power.
    pub fn pow(&self, exp: u64) -> Self {
        Prob(ratio_pow(&self.0, exp))
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl FromStr for Prob {
    type Err = Error;

    /// Parses `"num/den"` or a plain integer string.
    fn from_str(s: &str) -> Result<Self> {
        let value = parse_rational(s)?;
        Prob::new(value)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `"num/den"` or a plain integer string into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    BigRational::from_str(s).map_err(|_| Error::ParseRational {
        input: s.to_string(),
    })
}

/// Exact non-negative integer power of a rational.
pub fn ratio_pow(base: &BigRational, exp: u64) -> BigRational {
    let mut result = BigRational::one();
    let mut base = base.clone();
    let mut exp = exp;
    while exp > 0 {
        if exp & 1 == 1 {
            result *= &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Converts a rational with arbitrarily large numerator and denominator to the
/// nearest representable `f64`.
///
/// `BigRational::to_f64` divides the component conversions, which degrades to
/// `inf/inf` once either side exceeds the double range; this shifts the
/// quotient into range first so huge exact values (kernel powers at large
/// horizons) still convert faithfully.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    big_fraction_to_f64(r.numer(), r.denom())
}

/// `num / den` as `f64` for arbitrarily large integers (den > 0).
pub fn big_fraction_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    debug_assert!(den.sign() == Sign::Plus);
    let negative = num.is_negative();
    let num_abs = num.abs();
    // Shift so the integer quotient carries ~80 significant bits, convert,
    // then undo the shift in floating point.
    let shift: i64 = 80 - (num_abs.bits() as i64 - den.bits() as i64);
    let q = if shift >= 0 {
        (num_abs << shift as u64) / den
    } else {
        num_abs / (den << (-shift) as u64)
    };
    let mut value = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-shift as i32);
    if negative {
        value = -value;
    }
    value
}
