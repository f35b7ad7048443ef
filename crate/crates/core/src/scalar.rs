//! Scalar abstraction shared by the floating-point code paths.
//!
//! Everything that works in the log domain, the element-order DP and the
//! constant solver is written against [`Real`], so the same code runs on
//! `f32`/`f64` for quick answers and on [`BigFloat`] when the exponent range
//! or the significand of a machine float is not enough.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigUint;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};
use rug::float::Constant;
use rug::integer::Order;
use rug::{Float, Integer};

/// A real field with the transcendental functions the log-domain code needs.
pub trait Real:
    Num + Clone + PartialOrd + Neg<Output = Self> + FromPrimitive + Debug + Send + Sync
{
    /// Significand width in bits.
    const MANTISSA_BITS: u32;

    /// Smallest positive normal value. Anything below it may flush to zero.
    fn min_positive() -> Self;
    /// Unit roundoff, `2^(1 - MANTISSA_BITS)`.
    fn epsilon() -> Self;
    fn ln2() -> Self;

    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln_1p(&self) -> Self;
    fn exp_m1(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn is_finite(&self) -> bool;
    fn to_f64(&self) -> f64;

    /// Nearest value to `x`; saturates to infinity for machine floats.
    fn from_biguint(x: &BigUint) -> Self;

    /// Scientific notation with `digits` significant digits.
    fn to_sci(&self, digits: usize) -> String;

    fn from_u(x: u64) -> Self {
        Self::from_u64(x).expect("u64 is representable")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Natural log of an arbitrarily large integer, accurate to the working
/// precision of `T` even when `x` itself is outside its range.
pub fn ln_biguint<T: Real>(x: &BigUint) -> T {
    let keep = u64::from(T::MANTISSA_BITS) + 16;
    let bits = x.bits();
    if bits <= keep {
        return T::from_biguint(x).ln();
    }
    let shift = bits - keep;
    T::from_biguint(&(x >> shift)).ln() + T::from_u(shift) * T::ln2()
}

macro_rules! machine_real {
    ($t:ty, $bits:expr) => {
        impl Real for $t {
            const MANTISSA_BITS: u32 = $bits;

            fn min_positive() -> Self {
                <$t>::MIN_POSITIVE
            }
            fn epsilon() -> Self {
                <$t>::EPSILON
            }
            fn ln2() -> Self {
                std::f64::consts::LN_2 as $t
            }
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn ln_1p(&self) -> Self {
                <$t>::ln_1p(*self)
            }
            fn exp_m1(&self) -> Self {
                <$t>::exp_m1(*self)
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn from_biguint(x: &BigUint) -> Self {
                x.to_f64().map(|v| v as $t).unwrap_or(<$t>::INFINITY)
            }
            fn to_sci(&self, digits: usize) -> String {
                format!("{:.*e}", digits.saturating_sub(1), self)
            }
        }
    };
}

machine_real!(f32, 24);
machine_real!(f64, 53);

/// MPFR float with a compile-time precision of `PREC` bits.
///
/// The exponent range is MPFR's default (about ±2^30 binary orders), which is
/// what lets log-domain ratios as small as `exp(-10^300)` survive.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigFloat<const PREC: u32>(Float);

impl<const PREC: u32> BigFloat<PREC> {
    pub fn from_float(x: Float) -> Self {
        BigFloat(Float::with_val(PREC, x))
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }
}

impl<const PREC: u32> Debug for BigFloat<PREC> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFloat<{}>({})", PREC, self.0)
    }
}

impl<const PREC: u32> Display for BigFloat<PREC> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.0, f)
    }
}

macro_rules! big_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<const PREC: u32> $tr for BigFloat<PREC> {
            type Output = Self;
            fn $method(mut self, rhs: Self) -> Self {
                self.0 = Float::with_val(PREC, &self.0 $op &rhs.0);
                self
            }
        }
    };
}

big_binop!(Add, add, +);
big_binop!(Sub, sub, -);
big_binop!(Mul, mul, *);
big_binop!(Div, div, /);
big_binop!(Rem, rem, %);

impl<const PREC: u32> Neg for BigFloat<PREC> {
    type Output = Self;
    fn neg(self) -> Self {
        BigFloat(-self.0)
    }
}

impl<const PREC: u32> Zero for BigFloat<PREC> {
    fn zero() -> Self {
        BigFloat(Float::new(PREC))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const PREC: u32> One for BigFloat<PREC> {
    fn one() -> Self {
        BigFloat(Float::with_val(PREC, 1u32))
    }
}

impl<const PREC: u32> Num for BigFloat<PREC> {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(BigFloat(Float::with_val(PREC, parsed)))
    }
}

impl<const PREC: u32> FromPrimitive for BigFloat<PREC> {
    fn from_i64(n: i64) -> Option<Self> {
        Some(BigFloat(Float::with_val(PREC, n)))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(BigFloat(Float::with_val(PREC, n)))
    }
    fn from_f64(n: f64) -> Option<Self> {
        n.is_finite().then(|| BigFloat(Float::with_val(PREC, n)))
    }
}

impl<const PREC: u32> Real for BigFloat<PREC> {
    const MANTISSA_BITS: u32 = PREC;

    fn min_positive() -> Self {
        let shift = (1 - rug::float::exp_min()) as u32;
        BigFloat(Float::with_val(PREC, 1u32) >> shift)
    }
    fn epsilon() -> Self {
        BigFloat(Float::with_val(PREC, 1u32) >> (PREC - 1))
    }
    fn ln2() -> Self {
        BigFloat(Float::with_val(PREC, Constant::Log2))
    }
    fn ln(&self) -> Self {
        BigFloat(self.0.clone().ln())
    }
    fn exp(&self) -> Self {
        BigFloat(self.0.clone().exp())
    }
    fn ln_1p(&self) -> Self {
        BigFloat(self.0.clone().ln_1p())
    }
    fn exp_m1(&self) -> Self {
        BigFloat(self.0.clone().exp_m1())
    }
    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        BigFloat(self.0.clone().sqrt())
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn from_biguint(x: &BigUint) -> Self {
        let digits = x.to_u64_digits();
        let int = Integer::from_digits(&digits, Order::Lsf);
        BigFloat(Float::with_val(PREC, &int))
    }
    fn to_sci(&self, digits: usize) -> String {
        format!("{:.*e}", digits, self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Float256;

    #[test]
    fn big_float_arithmetic_matches_f64() {
        let a = Float256::from_f64(1.5).unwrap();
        let b = Float256::from_f64(-0.25).unwrap();
        assert_eq!((a.clone() + b.clone()).to_f64(), 1.25);
        assert_eq!((a.clone() * b.clone()).to_f64(), -0.375);
        assert_eq!((a.clone() / b.clone()).to_f64(), -6.0);
        assert_eq!((a - b).to_f64(), 1.75);
    }

    #[test]
    fn big_float_keeps_precision() {
        let third = Float256::one() / Float256::from_u(3);
        let back = third * Float256::from_u(3) - Float256::one();
        assert!(back.abs() <= Float256::epsilon());
        assert_eq!(Float256::MANTISSA_BITS, 256);
    }

    #[test]
    fn min_positive_is_tiny_but_nonzero() {
        let tiny = Float256::min_positive();
        assert!(tiny > Float256::zero());
        assert!((tiny.clone() / Float256::from_u(4)).is_zero());
        assert!(f64::min_positive() > 0.0);
    }

    #[test]
    fn ln_of_huge_integer() {
        let x = BigUint::one() << 100_000usize;
        let expect = 100_000.0 * std::f64::consts::LN_2;
        let got: f64 = ln_biguint(&x);
        assert!((got - expect).abs() / expect < 1e-14);
        let got: Float256 = ln_biguint(&x);
        let exact = Float256::from_u(100_000) * Float256::ln2();
        assert!((got - exact.clone()).abs() / exact < Float256::from_f64(1e-70).unwrap());
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(2.5f64.to_sci(3), "2.50e0");
        let s = Float256::from_u(230).to_sci(5);
        assert_eq!(s, "2.3000e2");
    }
}
