//! Exact scalar types used for every protocol-critical probability.
//!
//! All probability arithmetic in this crate is generic over [`ExactScalar`],
//! implemented for `Ratio<T>` with `T` one of `BigInt`, `i128` or `i64`.
//! The arbitrary-precision backend is the default everywhere; the fixed-width
//! backends are faster but panic on overflow (the workspace enables overflow
//! checks in every profile).

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::{BigInt, ToBigInt};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Integer backends for [`Ratio`].
pub trait ExactInt:
    Clone
    + Integer
    + Signed
    + Hash
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + ToBigInt
    + Send
    + Sync
    + 'static
{
    fn from_bigint(v: &BigInt) -> Option<Self>;

    /// Number of significant bits of `|self|` (0 for zero).
    fn bit_len(&self) -> u64;

    /// Number of trailing zero bits, `None` for zero.
    fn trailing_zero_bits(&self) -> Option<u64>;

    fn shl_bits(&self, k: u64) -> Self;

    fn shr_bits(&self, k: u64) -> Self;

    /// Compares `a * b` with `c * d` without overflow.
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Ordering;
}

impl ExactInt for BigInt {
    fn from_bigint(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }

    fn bit_len(&self) -> u64 {
        self.bits()
    }

    fn trailing_zero_bits(&self) -> Option<u64> {
        self.trailing_zeros()
    }

    fn shl_bits(&self, k: u64) -> Self {
        self << k
    }

    fn shr_bits(&self, k: u64) -> Self {
        self >> k
    }

    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Ordering {
        (a * b).cmp(&(c * d))
    }
}

macro_rules! fixed_width_int {
    ($t:ty, $to:ident) => {
        impl ExactInt for $t {
            fn from_bigint(v: &BigInt) -> Option<Self> {
                v.$to()
            }

            fn bit_len(&self) -> u64 {
                u64::from(<$t>::BITS - self.unsigned_abs().leading_zeros())
            }

            fn trailing_zero_bits(&self) -> Option<u64> {
                if *self == 0 {
                    None
                } else {
                    Some(u64::from(self.trailing_zeros()))
                }
            }

            fn shl_bits(&self, k: u64) -> Self {
                let k = u32::try_from(k).expect("shift amount overflows u32");
                let shifted = self.checked_shl(k).filter(|v| (v >> k) == *self);
                shifted.unwrap_or_else(|| {
                    panic!("{} << {} overflows {}", self, k, stringify!($t))
                })
            }

            fn shr_bits(&self, k: u64) -> Self {
                if k >= u64::from(<$t>::BITS) {
                    if *self < 0 {
                        -1
                    } else {
                        0
                    }
                } else {
                    self >> k
                }
            }

            fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Ordering {
                match (a.checked_mul(*b), c.checked_mul(*d)) {
                    (Some(l), Some(r)) => l.cmp(&r),
                    _ => (BigInt::from(*a) * BigInt::from(*b))
                        .cmp(&(BigInt::from(*c) * BigInt::from(*d))),
                }
            }
        }
    };
}

fixed_width_int!(i64, to_i64);
fixed_width_int!(i128, to_i128);

/// An exact ordered field element used for probabilities.
pub trait ExactScalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + num_traits::Num
    + Signed
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `2^-k`.
    fn pow2_neg(k: u32) -> Self;

    /// `self * 2^k`.
    fn mul_pow2(&self, k: i64) -> Self;

    /// Largest `e` with `2^e <= self`, or `None` when `self <= 0`.
    fn floor_log2(&self) -> Option<i64>;

    /// `Some(e)` iff `self == 2^e`.
    fn dyadic_exponent(&self) -> Option<i64>;

    /// Total order by cross-multiplication; agrees with `Ord`.
    fn cmp_value(&self, other: &Self) -> Ordering;

    fn to_rational(&self) -> BigRational;

    fn from_rational(r: &BigRational) -> Option<Self>;

    fn from_ratio(numer: i64, denom: i64) -> Self;
}

impl<T: ExactInt> ExactScalar for Ratio<T> {
    fn pow2_neg(k: u32) -> Self {
        Ratio::new_raw(T::one(), T::one().shl_bits(u64::from(k)))
    }

    fn mul_pow2(&self, k: i64) -> Self {
        if k == 0 || self.numer().is_zero() {
            return self.clone();
        }
        let (n, d) = (self.numer(), self.denom());
        if k > 0 {
            let k = k as u64;
            let s = d.trailing_zero_bits().unwrap_or(0).min(k);
            Ratio::new_raw(n.shl_bits(k - s), d.shr_bits(s))
        } else {
            let k = k.unsigned_abs();
            let s = n.trailing_zero_bits().unwrap_or(0).min(k);
            Ratio::new_raw(n.shr_bits(s), d.shl_bits(k - s))
        }
    }

    fn floor_log2(&self) -> Option<i64> {
        let (n, d) = (self.numer(), self.denom());
        if !n.is_positive() {
            return None;
        }
        let e0 = n.bit_len() as i64 - d.bit_len() as i64;
        // 2^(e0-1) < n/d < 2^(e0+1); decide with one exact comparison
        let at_least = if e0 >= 0 {
            *n >= d.shl_bits(e0 as u64)
        } else {
            n.shl_bits(e0.unsigned_abs()) >= *d
        };
        Some(if at_least { e0 } else { e0 - 1 })
    }

    fn dyadic_exponent(&self) -> Option<i64> {
        let (n, d) = (self.numer(), self.denom());
        if !n.is_positive() {
            return None;
        }
        let is_pow2 = |v: &T| v.trailing_zero_bits() == Some(v.bit_len() - 1);
        if is_pow2(n) && is_pow2(d) {
            Some(n.bit_len() as i64 - d.bit_len() as i64)
        } else {
            None
        }
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        if self.denom() == other.denom() {
            return self.numer().cmp(other.numer());
        }
        T::cmp_products(self.numer(), other.denom(), other.numer(), self.denom())
    }

    fn to_rational(&self) -> BigRational {
        let n = self.numer().to_bigint().expect("integer converts to BigInt");
        let d = self.denom().to_bigint().expect("integer converts to BigInt");
        BigRational::new_raw(n, d)
    }

    fn from_rational(r: &BigRational) -> Option<Self> {
        Some(Ratio::new_raw(T::from_bigint(r.numer())?, T::from_bigint(r.denom())?))
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        let n = T::from_i64(numer).expect("i64 fits every backend");
        let d = T::from_i64(denom).expect("i64 fits every backend");
        Ratio::new(n, d)
    }
}

/// `2^-k` as an exact big rational.
pub fn pow2_neg_big(k: u64) -> BigRational {
    BigRational::new_raw(BigInt::one(), BigInt::one() << k)
}

/// Parses `"n/d"`, an integer, or a finite decimal (`"0.125"`, `"-1.5"`,
/// `"2.5e-3"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty number".to_string());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(format!("not a number: {s:?}"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().unwrap_or_else(|_| BigInt::zero());
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    Ok(value)
}

/// Exact rational to text: `"n/d"`, or `"n"` for integers.
pub fn format_rational<Q: ExactScalar>(q: &Q) -> String {
    q.to_string()
}

/// Parses a rational into any exact backend.
pub fn parse_exact<Q: ExactScalar>(text: &str) -> Result<Q, String> {
    let r = parse_rational(text)?;
    Q::from_rational(&r).ok_or_else(|| format!("{text:?} does not fit the scalar backend"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn floor_log2_exact_powers_and_between() {
        assert_eq!(q(1, 1).floor_log2(), Some(0));
        assert_eq!(q(1, 2).floor_log2(), Some(-1));
        assert_eq!(q(1, 3).floor_log2(), Some(-2));
        assert_eq!(q(3, 1).floor_log2(), Some(1));
        assert_eq!(q(0, 1).floor_log2(), None);
        assert_eq!(q(-1, 2).floor_log2(), None);
    }

    #[test]
    fn dyadic_exponent_detects_powers_of_two() {
        assert_eq!(q(1, 8).dyadic_exponent(), Some(-3));
        assert_eq!(q(4, 1).dyadic_exponent(), Some(2));
        assert_eq!(q(3, 8).dyadic_exponent(), None);
        assert_eq!(q(1, 3).dyadic_exponent(), None);
    }

    #[test]
    fn mul_pow2_stays_reduced() {
        let a = q(3, 8).mul_pow2(2);
        assert_eq!(a, q(3, 2));
        assert_eq!(a.denom(), &BigInt::from(2));
        assert_eq!(q(3, 5).mul_pow2(-3), q(3, 40));
        assert_eq!(q(4, 5).mul_pow2(-3), q(1, 10));
    }

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rational("2/5").unwrap(), q(2, 5).to_rational());
        assert_eq!(parse_rational("0.4").unwrap(), q(2, 5).to_rational());
        assert_eq!(parse_rational("1").unwrap(), q(1, 1).to_rational());
        assert_eq!(parse_rational("2.5e-1").unwrap(), q(1, 4).to_rational());
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2).to_rational());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn fixed_width_shift_overflow_panics() {
        let r = std::panic::catch_unwind(|| Ratio::<i64>::pow2_neg(70));
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn cmp_value_agrees_with_ord(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let (x, y) = (q(a, b), q(c, d));
            prop_assert_eq!(x.cmp_value(&y), x.cmp(&y));
            let (xs, ys) = (Ratio::<i64>::from_ratio(a, b), Ratio::<i64>::from_ratio(c, d));
            prop_assert_eq!(xs.cmp_value(&ys), x.cmp(&y));
        }

        #[test]
        fn floor_log2_brackets(n in 1i64..1_000_000, d in 1i64..1_000_000) {
            let r = q(n, d);
            let e = r.floor_log2().unwrap();
            let lo = Rational::one().mul_pow2(e);
            let hi = Rational::one().mul_pow2(e + 1);
            prop_assert!(lo <= r && r < hi);
        }
    }
}
