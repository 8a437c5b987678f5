//! Exact rationals in the `"num/den"` wire format.
//!
//! All rationals in this crate are `num_rational::BigRational`, which keeps
//! values reduced with a positive denominator. The wire format is the string
//! `num/den` (denominator always printed, `2/1` not `2`), so round-trips are
//! bit-exact.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::str::FromStr;

/// Parse `"num/den"` or a bare integer `"num"`. The denominator must be
/// non-zero; sign may appear on either part and is normalised away.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::BadRational(s.to_string());
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num_str.trim()).map_err(|_| bad())?;
    let den = BigInt::from_str(den_str.trim()).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// Canonical `"num/den"` form: reduced, positive denominator, denominator
/// always present.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// The denominator of `x` written as a perfect square `B^2`, if it is one.
pub fn square_denominator_root(x: &BigRational) -> Option<BigInt> {
    let d = x.denom();
    if d.is_negative() {
        return None;
    }
    let r = d.sqrt();
    (&r * &r == *d).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn parses_plain_and_fraction_forms() {
        assert_eq!(parse_rational("2/1").unwrap(), BigRational::from_integer(2.into()));
        assert_eq!(parse_rational("2").unwrap(), BigRational::from_integer(2.into()));
        assert_eq!(
            parse_rational("106/9").unwrap(),
            BigRational::new(106.into(), 9.into())
        );
    }

    #[test]
    fn normalises_sign_and_reduces() {
        let r = parse_rational("4/-6").unwrap();
        assert_eq!(r, BigRational::new((-2).into(), 3.into()));
        assert!(r.denom() > &BigInt::from(0));
        assert_eq!(format_rational(&r), "-2/3");
    }

    #[test]
    fn rejects_bad_input() {
        for s in ["", "/", "1/0", "a/2", "1/2/3", "1.5", "0x10"] {
            assert!(parse_rational(s).is_err(), "{s:?} should be rejected");
        }
    }

    #[test]
    fn round_trip_is_canonical() {
        for s in ["0/1", "-11/1", "785/484", "-5497/10648"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
    }

    #[test]
    fn square_denominator() {
        let x = parse_rational("785/484").unwrap();
        assert_eq!(square_denominator_root(&x).unwrap(), BigInt::from(22));
        let y = parse_rational("1/2").unwrap();
        assert!(square_denominator_root(&y).is_none());
        assert!(square_denominator_root(&BigRational::one()).unwrap() == BigInt::one());
    }
}
