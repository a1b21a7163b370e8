use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::{ceil_q, floor_q, to_f64, Q};

/// A closed interval `[lo, hi]` with exact rational endpoints.
///
/// Every transcendental quantity in the crate is represented by one of
/// these; the true value is guaranteed to lie inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Q) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn mid_f64(&self) -> f64 {
        to_f64(&((&self.lo + &self.hi) / Q::from_integer(BigInt::from(2))))
    }

    pub fn width_f64(&self) -> f64 {
        to_f64(&self.width())
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn scale(&self, c: &Q) -> Interval {
        if c.is_negative() {
            Interval { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            Interval { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    /// Quotient; `None` when the divisor contains zero.
    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains(&Q::zero()) {
            return None;
        }
        let inv = Interval { lo: o.hi.recip(), hi: o.lo.recip() };
        Some(self.mul(&inv))
    }

    /// Widen both endpoints onto the dyadic grid `2^-bits`.
    pub fn round_outward(&self, bits: u32) -> Interval {
        let s = Q::from_integer(BigInt::one() << bits as usize);
        let lo = Q::new(floor_q(&(&self.lo * &s)), s.numer().clone());
        let hi = Q::new(ceil_q(&(&self.hi * &s)), s.numer().clone());
        Interval { lo, hi }
    }

    /// Certified comparison: `Some` only when the order is decided by the
    /// enclosures (or both are the same exact point).
    pub fn cmp_certified(&self, o: &Interval) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else if self.is_point() && o.is_point() && self.lo == o.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn cmp_q(&self, x: &Q) -> Option<Ordering> {
        self.cmp_certified(&Interval::point(x.clone()))
    }
}

// Fixed-point helpers: a value v is represented by an integer V with
// V / 2^s bounding v from the named side.

fn shl(x: &BigInt, s: u32) -> BigInt {
    x << s as usize
}

/// atanh(p/q) for 0 <= p/q <= 1/2, bracketed in units of 2^-s.
fn atanh_fixed(p: &BigUint, q: &BigUint, s: u32) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    if p.is_zero() {
        return (lo, hi);
    }
    let p2 = p * p;
    let q2 = q * q;
    let mut num = BigInt::from(p.clone());
    let mut den = BigInt::from(q.clone());
    let unit = BigInt::one() << s as usize;
    let mut i: u64 = 0;
    loop {
        let term = shl(&num, s).div_floor(&(&den * BigInt::from(2 * i + 1)));
        lo += &term;
        hi += term + 1;
        // Remaining tail is at most z^(2i+1) * z^2/(1-z^2) <= z^(2i+1)/3.
        if &num * &unit < den {
            hi += 1;
            break;
        }
        num *= BigInt::from(p2.clone());
        den *= BigInt::from(q2.clone());
        i += 1;
    }
    (lo, hi)
}

fn ln2_fixed(s: u32) -> (BigInt, BigInt) {
    let (lo, hi) = atanh_fixed(&BigUint::one(), &BigUint::from(3u32), s);
    (lo * 2, hi * 2)
}

fn fixed_to_interval(lo: BigInt, hi: BigInt, s: u32) -> Interval {
    let den = BigInt::one() << s as usize;
    Interval { lo: Q::new(lo, den.clone()), hi: Q::new(hi, den) }
}

/// Certified enclosure of `ln n` for an integer `n >= 1`, of width at most
/// about `2^-bits`.
pub fn ln_enclosure(n: &BigUint, bits: u32) -> Interval {
    assert!(!n.is_zero(), "ln of zero");
    if n.is_one() {
        return Interval::point(Q::zero());
    }
    let e = (n.bits() - 1) as u32;
    let s = bits + 24 + (64 - (e as u64 + 1).leading_zeros());
    let two_e = BigUint::one() << e as usize;
    // n = 2^e * y with y in [1, 2); ln y = 2 atanh((y-1)/(y+1)).
    let (zlo, zhi) = atanh_fixed(&(n - &two_e), &(n + &two_e), s);
    let (l2lo, l2hi) = ln2_fixed(s);
    let e_big = BigInt::from(e);
    let lo = &e_big * l2lo + zlo * 2;
    let hi = &e_big * l2hi + zhi * 2;
    fixed_to_interval(lo, hi, s)
}

/// Enclosure of `ln x` for a positive rational.
pub fn ln_rational_enclosure(x: &Q, bits: u32) -> Interval {
    assert!(x.is_positive(), "ln of a nonpositive rational");
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    ln_enclosure(n, bits + 1).sub(&ln_enclosure(d, bits + 1))
}

/// exp(x) for x = p / 2^s with 0 <= x <= 1/2, bracketed in units of 2^-s.
fn exp_small_fixed(p: &BigInt, s: u32) -> (BigInt, BigInt) {
    let unit = BigInt::one() << s as usize;
    let mut lo_term = unit.clone();
    let mut hi_term = unit.clone();
    let mut lo = unit.clone();
    let mut hi = unit;
    let mut i: u64 = 1;
    loop {
        let div = BigInt::from(i) << s as usize;
        lo_term = (&lo_term * p).div_floor(&div);
        let (qt, r) = (&hi_term * p).div_mod_floor(&div);
        hi_term = if r.is_zero() { qt } else { qt + 1 };
        lo += &lo_term;
        hi += &hi_term;
        if hi_term <= BigInt::one() {
            // Later terms shrink by at least a factor 1/2 each.
            hi += 2;
            break;
        }
        i += 1;
    }
    (lo, hi)
}

fn exp_lower_or_upper(x: &Q, bits: u32, upper: bool) -> Q {
    // exp(x) = exp(x / 2^h)^(2^h), and exp(-y) = 1 / exp(y).
    let neg = x.is_negative();
    let ax = x.abs();
    let mag_bits = ceil_q(&ax).bits() as u32;
    let h = mag_bits + 1;
    let s = bits + 2 * h + 2 * mag_bits + 40;
    let scaled = &ax * Q::from_integer(BigInt::one() << (s as usize)) / Q::from_integer(BigInt::one() << h as usize);
    // For exp(-y) we need the opposite bound on exp(y).
    let want_upper_of_pos = upper != neg;
    let p = if want_upper_of_pos { ceil_q(&scaled) } else { floor_q(&scaled) };
    let (mut lo, mut hi) = exp_small_fixed(&p, s);
    for _ in 0..h {
        lo = (&lo * &lo) >> s as usize;
        let sq = &hi * &hi;
        let (qt, r) = sq.div_mod_floor(&(BigInt::one() << s as usize));
        hi = if r.is_zero() { qt } else { qt + 1 };
    }
    let den = BigInt::one() << s as usize;
    let v = if want_upper_of_pos { Q::new(hi, den) } else { Q::new(lo, den) };
    if neg {
        v.recip()
    } else {
        v
    }
}

/// Certified enclosure of `exp` over an interval argument.
pub fn exp_enclosure(x: &Interval, bits: u32) -> Interval {
    let lo = exp_lower_or_upper(&x.lo, bits, false);
    let hi = exp_lower_or_upper(&x.hi, bits, true);
    Interval { lo, hi }.round_outward(bits + 8)
}

/// Enclosure of `base^e` for a positive rational base and rational exponent,
/// computed through integer roots (no series involved).
pub fn pow_rational_enclosure(base: &Q, e: &Q, bits: u32) -> Interval {
    assert!(base.is_positive(), "power of a nonpositive base");
    let p = e.numer();
    let r = e.denom().magnitude().clone();
    let r_u32: u32 = num_traits::ToPrimitive::to_u32(&r).expect("root index too large");
    let pa = p.magnitude().clone();
    let pa_usize = num_traits::ToPrimitive::to_usize(&pa).expect("exponent too large");
    let raised = num_traits::pow(base.clone(), pa_usize);
    let raised = if p.sign() == Sign::Minus { raised.recip() } else { raised };
    // Scale so the integer root has about `bits` fractional bits.
    let s = bits + 8;
    let scaled = raised * Q::from_integer(BigInt::one() << (s as usize * r_u32 as usize));
    let a = floor_q(&scaled);
    let a_mag = a.magnitude().clone();
    let y = a_mag.nth_root(r_u32);
    let exact = scaled.denom().is_one() && num_traits::pow(y.clone(), r_u32 as usize) == a_mag;
    let den = BigInt::one() << s as usize;
    let lo = Q::new(BigInt::from(y.clone()), den.clone());
    let hi = if exact { lo.clone() } else { Q::new(BigInt::from(y) + 1, den) };
    Interval { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::q;

    fn approx(iv: &Interval, v: f64, tol: f64) {
        assert!(
            (iv.mid_f64() - v).abs() < tol,
            "enclosure mid {} vs {}",
            iv.mid_f64(),
            v
        );
    }

    #[test]
    fn ln_encloses_libm_values() {
        for n in [2u64, 3, 5, 7, 10, 12, 1000, 1 << 40, 999_999_937] {
            let iv = ln_enclosure(&BigUint::from(n), 80);
            approx(&iv, libm::log(n as f64), 1e-14);
            assert!(iv.width_f64() < 1e-20);
        }
    }

    #[test]
    fn ln_widths_shrink_with_precision() {
        let a = ln_enclosure(&BigUint::from(3u32), 64);
        let b = ln_enclosure(&BigUint::from(3u32), 256);
        assert!(b.lo >= &a.lo - q(1, 1 << 40) && b.width() < a.width());
        assert!(b.width_f64() < 1e-70);
    }

    #[test]
    fn ln_additivity_is_consistent() {
        // ln 6 must overlap ln 2 + ln 3.
        let l6 = ln_enclosure(&BigUint::from(6u32), 100);
        let s = ln_enclosure(&BigUint::from(2u32), 100).add(&ln_enclosure(&BigUint::from(3u32), 100));
        assert!(l6.lo <= s.hi && s.lo <= l6.hi);
    }

    #[test]
    fn exp_matches_libm_and_inverts_ln() {
        for x in [q(0, 1), q(1, 3), q(-7, 4), q(5, 1), q(-12, 1)] {
            let iv = exp_enclosure(&Interval::point(x.clone()), 90);
            let v = libm::exp(to_f64(&x));
            assert!((iv.mid_f64() - v).abs() <= 1e-13 * v.max(1.0));
            assert!(iv.lo <= iv.hi);
        }
        let l5 = ln_enclosure(&BigUint::from(5u32), 120);
        let back = exp_enclosure(&l5, 120);
        assert!(back.contains(&q(5, 1)));
    }

    #[test]
    fn rational_powers_are_exact_when_possible() {
        let iv = pow_rational_enclosure(&q(9, 1), &q(1, 2), 64);
        assert!(iv.is_point() && iv.lo == q(3, 1));
        let iv = pow_rational_enclosure(&q(2, 1), &q(1, 2), 64);
        assert!(iv.contains(&iv.lo) && (iv.mid_f64() - core::f64::consts::SQRT_2).abs() < 1e-15);
        let iv = pow_rational_enclosure(&q(3, 1), &q(-3, 2), 64);
        assert!((iv.mid_f64() - libm::pow(3.0, -1.5)).abs() < 1e-15);
    }

    #[test]
    fn certified_comparison_only_when_separated() {
        let a = Interval::new(q(0, 1), q(1, 2));
        let b = Interval::new(q(1, 3), q(1, 1));
        assert_eq!(a.cmp_certified(&b), None);
        assert_eq!(a.cmp_q(&q(1, 1)), Some(Ordering::Less));
        assert_eq!(Interval::point(q(1, 2)).cmp_q(&q(1, 2)), Some(Ordering::Equal));
    }
}
