//! Exact arbitrary-precision rationals with a canonical `p/q` text form.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An exact rational number, always kept in lowest terms with a positive
/// denominator.
///
/// The text form is always `p/q`, including integers (`3/1`), so that
/// documents written by this crate are byte-stable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, Error> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    /// Panics on a zero denominator; intended for literals.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom).expect("zero denominator")
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_big(value: BigRational) -> Self {
        Rational(value)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    /// Largest integer not above `self`.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer not below `self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Nearest integer, ties rounded up.
    pub fn round_int(&self) -> BigInt {
        (self + &Rational::frac(1, 2)).floor_int()
    }

    /// `self mod modulus` in `[0, modulus)`. `modulus` must be positive.
    pub fn rem_euclid(&self, modulus: &Rational) -> Rational {
        debug_assert!(modulus.is_positive());
        let quotient = (self / modulus).floor_int();
        self - &(modulus * &Rational::integer(quotient))
    }

    pub fn min_of(a: Rational, b: Rational) -> Rational {
        if a <= b {
            a
        } else {
            b
        }
    }

    pub fn max_of(a: Rational, b: Rational) -> Rational {
        if a >= b {
            a
        } else {
            b
        }
    }

    /// Least common multiple of two positive rationals: the smallest positive
    /// rational that is an integer multiple of both.
    pub fn lcm(&self, other: &Rational) -> Rational {
        let numer = self.numer().lcm(other.numer());
        let denom = self.denom().gcd(other.denom());
        Rational(BigRational::new(numer, denom))
    }

    /// Greatest common divisor of two positive rationals: the largest
    /// rational of which both are integer multiples.
    pub fn gcd(&self, other: &Rational) -> Rational {
        let numer = self.numer().gcd(other.numer());
        let denom = self.denom().lcm(other.denom());
        Rational(BigRational::new(numer, denom))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Number of bits of `ceil(|self|)`; an upper bound on `log2(1 + |self|)`.
    pub fn magnitude_bits(&self) -> u64 {
        self.abs().ceil_int().bits()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p/q` or a bare integer `p`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::InvalidRational(s.to_string());
        let (numer, denom) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        if numer.is_empty() || denom.is_empty() || denom.starts_with(['-', '+']) {
            return Err(bad());
        }
        let numer: BigInt = numer.parse().map_err(|_| bad())?;
        let denom: BigInt = denom.parse().map_err(|_| bad())?;
        Rational::new(numer, denom)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::integer(n)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0.partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_text_form() {
        assert_eq!(Rational::frac(6, -4).to_string(), "-3/2");
        assert_eq!(Rational::integer(3).to_string(), "3/1");
        assert_eq!(Rational::zero().to_string(), "0/1");
    }

    #[test]
    fn parse_rejects_zero_denominator_and_garbage() {
        assert!(matches!("3/0".parse::<Rational>(), Err(Error::ZeroDenominator)));
        assert!("abc".parse::<Rational>().is_err());
        assert!("1/".parse::<Rational>().is_err());
        assert!("1/-2".parse::<Rational>().is_err());
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::integer(7));
        assert_eq!(" -2/6 ".parse::<Rational>().unwrap(), Rational::frac(-1, 3));
    }

    #[test]
    fn rational_lcm_and_gcd() {
        let half = Rational::frac(1, 2);
        assert_eq!(half.lcm(&Rational::frac(1, 3)), Rational::one());
        assert_eq!(half.lcm(&Rational::frac(3, 4)), Rational::frac(3, 2));
        assert_eq!(Rational::one().gcd(&half), half);
    }

    #[test]
    fn rem_euclid_handles_negatives() {
        let m = Rational::one();
        assert_eq!(Rational::frac(-9, 4).rem_euclid(&m), Rational::frac(3, 4));
        assert_eq!(Rational::integer(2).rem_euclid(&m), Rational::zero());
    }

    proptest! {
        #[test]
        fn text_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let r = Rational::frac(n, d);
            let back: Rational = r.to_string().parse().unwrap();
            prop_assert_eq!(&back, &r);
            let json = serde_json::to_string(&r).unwrap();
            let back: Rational = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
