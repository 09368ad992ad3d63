//! Exact rational scalars with multiplicative heights.
//!
//! An [`ExactScalar`] is an arbitrary-precision rational kept in lowest terms
//! with positive denominator. Its height is the multiplicative height
//! `H(p/q) = max(|p|, q)`, with `H(0) = 1` by the usual convention.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact rational number in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    /// Builds `numer/denom`, normalizing to lowest terms.
    ///
    /// Panics if `denom` is zero.
    pub fn new<N: Into<BigInt>, D: Into<BigInt>>(numer: N, denom: D) -> Self {
        let d = denom.into();
        assert!(!d.is_zero(), "zero denominator");
        ExactScalar(BigRational::new(numer.into(), d))
    }

    pub fn from_int<N: Into<BigInt>>(n: N) -> Self {
        ExactScalar(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Multiplicative height `max(|numer|, denom)`; equals 1 for zero.
    pub fn height(&self) -> BigInt {
        let n = self.0.numer().abs();
        let d = self.0.denom().clone();
        if n > d {
            n
        } else {
            d
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// The integer value, if the denominator is 1.
    pub fn to_bigint(&self) -> Option<BigInt> {
        if self.0.is_integer() {
            Some(self.0.numer().clone())
        } else {
            None
        }
    }

    pub fn abs(&self) -> Self {
        ExactScalar(self.0.abs())
    }

    /// Exact reciprocal; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(ExactScalar(self.0.recip()))
        }
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }
}

impl From<BigRational> for ExactScalar {
    fn from(r: BigRational) -> Self {
        ExactScalar(r)
    }
}

impl From<BigInt> for ExactScalar {
    fn from(n: BigInt) -> Self {
        ExactScalar::from_int(n)
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::from_int(n)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: ExactScalar) -> ExactScalar {
        assert!(!rhs.is_zero(), "division by zero");
        ExactScalar(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &'a ExactScalar) -> ExactScalar {
        assert!(!rhs.is_zero(), "division by zero");
        ExactScalar(&self.0 / &rhs.0)
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl<'a> Neg for &'a ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

impl fmt::Display for ExactScalar {
    /// Writes `p` for integers and `p/q` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for ExactScalar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|e| format!("bad numerator {s:?}: {e}"))?;
                let d: BigInt = d.trim().parse().map_err(|e| format!("bad denominator {s:?}: {e}"))?;
                if d.is_zero() {
                    return Err(format!("zero denominator in {s:?}"));
                }
                Ok(ExactScalar::new(n, d))
            }
            None => {
                let n: BigInt = s.parse().map_err(|e| format!("bad integer {s:?}: {e}"))?;
                Ok(ExactScalar::from_int(n))
            }
        }
    }
}
