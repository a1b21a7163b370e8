use alloc::format;
use alloc::string::ToString;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{CoreError, Result};

/// Exact rational numbers used throughout the crate.
pub type Q = BigRational;

/// Build `n / d` as an exact rational. Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn pow_u(base: u64, exp: u32) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

pub fn floor_q(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_q(x: &Q) -> BigInt {
    let (d, r) = x.numer().div_mod_floor(x.denom());
    if r.is_zero() {
        d
    } else {
        d + 1
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac_q(x: &Q) -> Q {
    x - Q::from_integer(floor_q(x))
}

/// Nearest `f64`, via a shifted integer quotient so huge numerators do not
/// overflow.
pub fn to_f64(x: &Q) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let n = x.numer().abs();
    let d = x.denom().clone();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // Scale so the integer quotient carries about 64 significant bits.
    let shift = 64 - (nb - db);
    let quot = if shift >= 0 {
        (n << (shift as usize)) / d
    } else {
        n / (d << ((-shift) as usize))
    };
    let mag = quot.to_f64().unwrap_or(f64::INFINITY) * libm::exp2(-(shift as f64));
    if x.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Convert a nonnegative integral rational to `u128`.
pub fn u128_of(x: &BigInt) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| CoreError::Overflow(format!("{} does not fit in u128", x)))
}

/// Parse an exact rational from `"p"`, `"p/q"` or a finite decimal such as
/// `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || CoreError::InvalidArgument(format!("not an exact rational: {:?}", s));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, fr)) = s.split_once('.') {
        if fr.is_empty() || !fr.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            digits => digits.parse().map_err(|_| bad())?,
        };
        let frac_part: BigInt = fr.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), fr.len());
        let mag = Q::new(int_part * &scale + frac_part, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub(crate) fn fmt_q(x: &Q) -> alloc::string::String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floors_and_fracs() {
        assert_eq!(floor_q(&q(-1, 3)), BigInt::from(-1));
        assert_eq!(ceil_q(&q(-1, 3)), BigInt::from(0));
        assert_eq!(ceil_q(&q(6, 3)), BigInt::from(2));
        assert_eq!(frac_q(&q(7, 3)), q(1, 3));
        assert_eq!(frac_q(&q(-1, 4)), q(3, 4));
    }

    #[test]
    fn parses_exact_forms() {
        assert_eq!(parse_rational("2/3").unwrap(), q(2, 3));
        assert_eq!(parse_rational("-4/6").unwrap(), q(-2, 3));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), qi(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn f64_conversion_handles_large_terms() {
        let big = Q::new(BigInt::from(10u32).pow(400) + 1u32, BigInt::from(10u32).pow(400));
        assert!((to_f64(&big) - 1.0).abs() < 1e-15);
        assert!((to_f64(&q(-1, 3)) + 1.0 / 3.0).abs() < 1e-16);
    }
}
