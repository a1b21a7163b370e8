//! Symbolic combinations `c + Σ (Σ_p c_p log p) / log b` of logarithm ratios.
//!
//! Each group is keyed by a base `b` that is not a perfect power, and the
//! component of the numerator proportional to `log b` is always folded into
//! the rational constant. With that normal form, two expressions built from
//! the same logarithms are equal as formal expressions exactly when their
//! normal forms coincide, which is how identities such as a star dimension
//! equal to 2 are decided without any tolerance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::{exp_enclosure, ln_enclosure, ln_rational_enclosure, Interval};
use super::primes::{factorize, perfect_power_root};
use super::rational::{fmt_q, Q};

/// Precision cap used when ordering expressions that do not reduce
/// symbolically.
pub const MAX_COMPARE_BITS: u32 = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LogExpr {
    constant: Q,
    groups: BTreeMap<u64, BTreeMap<u64, Q>>,
}

fn exponents_of_ratio(num: u64, den: u64) -> BTreeMap<u64, Q> {
    let mut v: BTreeMap<u64, Q> = BTreeMap::new();
    for (p, e) in factorize(num) {
        *v.entry(p).or_insert_with(Q::zero) += Q::from_integer(BigInt::from(e));
    }
    for (p, e) in factorize(den) {
        *v.entry(p).or_insert_with(Q::zero) -= Q::from_integer(BigInt::from(e));
    }
    v.retain(|_, c| !c.is_zero());
    v
}

impl LogExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(c: Q) -> Self {
        LogExpr { constant: c, groups: BTreeMap::new() }
    }

    pub fn integer(c: i64) -> Self {
        Self::rational(Q::from_integer(BigInt::from(c)))
    }

    /// `log(num/den) / log(base)`.
    pub fn log_ratio(num: u64, den: u64, base: u64) -> Self {
        assert!(num >= 1 && den >= 1 && base >= 2, "log_ratio arguments out of range");
        let (root, k) = perfect_power_root(base);
        let scale = Q::new(BigInt::one(), BigInt::from(k));
        let mut numer = exponents_of_ratio(num, den);
        for c in numer.values_mut() {
            *c *= &scale;
        }
        let mut groups = BTreeMap::new();
        if !numer.is_empty() {
            groups.insert(root, numer);
        }
        let mut e = LogExpr { constant: Q::zero(), groups };
        e.normalize();
        e
    }

    /// `log(a) / log(b)` for integers.
    pub fn log_of(a: u64, base: u64) -> Self {
        Self::log_ratio(a, 1, base)
    }

    fn normalize(&mut self) {
        let mut empty = Vec::new();
        for (&root, numer) in self.groups.iter_mut() {
            let rf = factorize(root);
            let (p0, e0) = rf[0];
            if let Some(c0) = numer.get(&p0).cloned() {
                let lambda = c0 / Q::from_integer(BigInt::from(e0));
                for &(p, e) in &rf {
                    let entry = numer.entry(p).or_insert_with(Q::zero);
                    *entry -= &lambda * Q::from_integer(BigInt::from(e));
                }
                self.constant += lambda;
            }
            numer.retain(|_, c| !c.is_zero());
            if numer.is_empty() {
                empty.push(root);
            }
        }
        for r in empty {
            self.groups.remove(&r);
        }
    }

    pub fn constant(&self) -> &Q {
        &self.constant
    }

    /// `Some(value)` when the expression is a plain rational.
    pub fn as_rational(&self) -> Option<Q> {
        self.groups.is_empty().then(|| self.constant.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.groups.is_empty() && self.constant.is_zero()
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = self.clone();
        out.constant *= c;
        for numer in out.groups.values_mut() {
            for v in numer.values_mut() {
                *v *= c;
            }
        }
        out
    }

    pub fn add(&self, o: &LogExpr) -> Self {
        let mut out = self.clone();
        out.constant += &o.constant;
        for (root, numer) in &o.groups {
            let g = out.groups.entry(*root).or_default();
            for (p, c) in numer {
                *g.entry(*p).or_insert_with(Q::zero) += c;
            }
        }
        for g in out.groups.values_mut() {
            g.retain(|_, c| !c.is_zero());
        }
        out.groups.retain(|_, g| !g.is_empty());
        out.normalize();
        out
    }

    pub fn sub(&self, o: &LogExpr) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn add_rational(&self, c: &Q) -> Self {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// Certified enclosure of the value.
    pub fn enclosure(&self, bits: u32) -> Interval {
        let guard = bits + 8 + 2 * (self.groups.len() as u32 + 1);
        let mut acc = Interval::point(self.constant.clone());
        for (root, numer) in &self.groups {
            let mut top = Interval::point(Q::zero());
            for (p, c) in numer {
                let cf = c.abs();
                let extra = (crate::numeric::rational::ceil_q(&cf).bits() as u32) + 4;
                top = top.add(&ln_enclosure(&BigUint::from(*p), guard + extra).scale(c));
            }
            let bottom = ln_enclosure(&BigUint::from(*root), guard + 8);
            acc = acc.add(&top.div(&bottom).expect("log of a base >= 2 is positive"));
        }
        acc.round_outward(bits + 4)
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure(64).mid_f64()
    }
}

impl fmt::Display for LogExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        if !self.constant.is_zero() || self.groups.is_empty() {
            let neg = self.constant.is_negative();
            parts.push((neg, fmt_q(&self.constant.abs())));
        }
        for (root, numer) in &self.groups {
            // Clear denominators: numer = (1/l) * Σ E_p log p.
            let l = numer
                .values()
                .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let mut pos = BigUint::one();
            let mut neg = BigUint::one();
            for (p, c) in numer {
                let e = (c * Q::from_integer(l.clone())).to_integer();
                let pe = num_traits::pow(BigUint::from(*p), e.abs().to_usize().unwrap_or(0));
                if e.is_negative() {
                    neg *= pe;
                } else {
                    pos *= pe;
                }
            }
            // Keep the argument of log above 1 so the sign sits outside.
            let (flip, arg) = if pos >= neg {
                (false, if neg.is_one() { format!("{}", pos) } else { format!("{}/{}", pos, neg) })
            } else {
                (true, if pos.is_one() { format!("{}", neg) } else { format!("{}/{}", neg, pos) })
            };
            let coef = if l.is_one() { String::new() } else { format!("(1/{})*", l) };
            parts.push((flip, format!("{}log({})/log({})", coef, arg, root)));
        }
        for (i, (neg, s)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{}", s)?,
                (0, false) => write!(f, "{}", s)?,
                (_, true) => write!(f, " - {}", s)?,
                (_, false) => write!(f, " + {}", s)?,
            }
        }
        Ok(())
    }
}

/// A dimension value: either a symbolic log combination, or a McMullen sum,
/// which is transcendental in general and is carried by its defining data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DimExpr {
    Log(LogExpr),
    /// `offset + log_n( Σ count · size^(log n / log m) )` over
    /// (size, count) pairs.
    McMullen { m: u64, n: u64, sizes: Vec<(u64, u64)>, offset: Q },
}

impl DimExpr {
    pub fn rational(c: Q) -> Self {
        DimExpr::Log(LogExpr::rational(c))
    }

    /// Build a McMullen sum, collapsing to a log combination when every
    /// term has the same fiber size.
    pub fn mcmullen(m: u64, n: u64, sizes: &[u64]) -> Self {
        let mut tally: BTreeMap<u64, u64> = BTreeMap::new();
        for &s in sizes.iter().filter(|&&s| s > 0) {
            *tally.entry(s).or_default() += 1;
        }
        if tally.len() == 1 {
            let (&s, &c) = tally.iter().next().unwrap();
            return DimExpr::Log(LogExpr::log_of(c, n).add(&LogExpr::log_of(s, m)));
        }
        DimExpr::McMullen { m, n, sizes: tally.into_iter().collect(), offset: Q::zero() }
    }

    pub fn as_log(&self) -> Option<&LogExpr> {
        match self {
            DimExpr::Log(e) => Some(e),
            DimExpr::McMullen { .. } => None,
        }
    }

    pub fn exact_rational(&self) -> Option<Q> {
        self.as_log().and_then(LogExpr::as_rational)
    }

    pub fn enclosure(&self, bits: u32) -> Interval {
        match self {
            DimExpr::Log(e) => e.enclosure(bits),
            DimExpr::McMullen { m, n, sizes, offset } => {
                let w = bits + 16;
                let ln_m = ln_enclosure(&BigUint::from(*m), w + 16);
                let ln_n = ln_enclosure(&BigUint::from(*n), w + 16);
                let ratio = ln_n.div(&ln_m).unwrap();
                let mut sum = Interval::point(Q::zero());
                for &(s, c) in sizes {
                    let ls = ln_enclosure(&BigUint::from(s), w + 16);
                    let term = exp_enclosure(&ls.mul(&ratio).round_outward(w + 8), w + 8);
                    sum = sum.add(&term.scale(&Q::from_integer(BigInt::from(c))));
                }
                let sum = sum.round_outward(w + 8);
                let ln_sum = Interval {
                    lo: ln_rational_enclosure(&sum.lo, w).lo,
                    hi: ln_rational_enclosure(&sum.hi, w).hi,
                };
                ln_sum.div(&ln_n).unwrap().add(&Interval::point(offset.clone())).round_outward(bits + 4)
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure(64).mid_f64()
    }

    /// Exact symbolic equality (normal forms coincide).
    pub fn symbolically_equal(&self, o: &DimExpr) -> bool {
        match (self, o) {
            (DimExpr::Log(a), DimExpr::Log(b)) => a.sub(b).is_zero(),
            _ => self == o,
        }
    }

    /// Order two values: symbolic reduction first, then enclosures refined
    /// up to `max_bits`. `None` if still undecided.
    pub fn certified_cmp(&self, o: &DimExpr, max_bits: u32) -> Option<Ordering> {
        if self.symbolically_equal(o) {
            return Some(Ordering::Equal);
        }
        if let (DimExpr::Log(a), DimExpr::Log(b)) = (self, o) {
            let d = a.sub(b);
            if let Some(c) = d.as_rational() {
                return Some(c.cmp(&Q::zero()));
            }
            let mut bits = 64;
            while bits <= max_bits {
                if let Some(ord) = d.enclosure(bits).cmp_q(&Q::zero()) {
                    return Some(ord);
                }
                bits *= 2;
            }
            return None;
        }
        let mut bits = 64;
        while bits <= max_bits {
            if let Some(ord) = self.enclosure(bits).cmp_certified(&o.enclosure(bits)) {
                return Some(ord);
            }
            bits *= 2;
        }
        None
    }

    /// Largest of the values; ties that survive certification keep the
    /// earliest entry.
    pub fn max_of(items: impl IntoIterator<Item = DimExpr>) -> DimExpr {
        let mut best: Option<DimExpr> = None;
        for it in items {
            best = Some(match best {
                None => it,
                Some(b) => match it.certified_cmp(&b, MAX_COMPARE_BITS) {
                    Some(Ordering::Greater) => it,
                    _ => b,
                },
            });
        }
        best.expect("max over an empty family")
    }

    /// `max{self, 0}`.
    pub fn clamp_zero(self) -> DimExpr {
        Self::max_of([self, DimExpr::rational(Q::zero())])
    }

    /// Shift by a rational constant.
    pub fn add_rational(&self, c: &Q) -> DimExpr {
        match self {
            DimExpr::Log(e) => DimExpr::Log(e.add_rational(c)),
            DimExpr::McMullen { m, n, sizes, offset } => {
                DimExpr::McMullen { m: *m, n: *n, sizes: sizes.clone(), offset: offset + c }
            }
        }
    }

    /// Sum of two values. McMullen terms only combine with log terms that
    /// are rational constants; anything else is a caller error.
    pub fn add(&self, o: &DimExpr) -> DimExpr {
        match (self, o) {
            (DimExpr::Log(a), DimExpr::Log(b)) => DimExpr::Log(a.add(b)),
            (DimExpr::McMullen { .. }, DimExpr::Log(b)) | (DimExpr::Log(b), DimExpr::McMullen { .. })
                if b.as_rational().is_some() =>
            {
                let mc = if matches!(self, DimExpr::McMullen { .. }) { self } else { o };
                mc.add_rational(&b.as_rational().unwrap())
            }
            _ => panic!("McMullen sums are not combined symbolically"),
        }
    }
}

impl fmt::Display for DimExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimExpr::Log(e) => write!(f, "{}", e),
            DimExpr::McMullen { m, n, sizes, offset } => {
                if !offset.is_zero() {
                    write!(f, "{} + ", super::rational::fmt_q(offset))?;
                }
                write!(f, "log(")?;
                for (i, (s, c)) in sizes.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    let coef = if *c == 1 { String::new() } else { format!("{}*", c) };
                    write!(f, "{}{}^(log({})/log({}))", coef, s, n, m)?;
                }
                write!(f, ")/log({})", n)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::q;
    use alloc::string::ToString;

    #[test]
    fn normal_form_folds_proportional_parts() {
        let e = LogExpr::log_of(5, 5);
        assert_eq!(e.as_rational(), Some(q(1, 1)));
        let e = LogExpr::log_of(8, 4);
        assert_eq!(e.as_rational(), Some(q(3, 2)));
        let e = LogExpr::log_ratio(3, 2, 3);
        assert_eq!(e.to_string(), "1 - log(2)/log(3)");
        let e = LogExpr::log_of(36, 6);
        assert_eq!(e.as_rational(), Some(q(2, 1)));
        let e = LogExpr::log_of(2, 3).add(&LogExpr::log_of(3, 3));
        assert_eq!(e.to_string(), "1 + log(2)/log(3)");
    }

    #[test]
    fn enclosures_match_floats() {
        let e = LogExpr::integer(1).add(&LogExpr::log_ratio(3, 2, 3));
        let iv = e.enclosure(64);
        let v = 1.0 + libm::log(1.5) / libm::log(3.0);
        assert!((iv.mid_f64() - v).abs() < 1e-15);
        assert!(iv.width_f64() < 1e-18);
    }

    #[test]
    fn mcmullen_enclosure_and_collapse() {
        let d = DimExpr::mcmullen(3, 2, &[2, 1]);
        let v = libm::log(libm::pow(2.0, libm::log(2.0) / libm::log(3.0)) + 1.0) / libm::log(2.0);
        let iv = d.enclosure(80);
        assert!((iv.mid_f64() - v).abs() < 1e-14, "{} vs {}", iv.mid_f64(), v);
        assert!(iv.width_f64() < 1e-20);
        let u = DimExpr::mcmullen(4, 2, &[2, 2, 0]);
        assert!(u.as_log().is_some());
        assert!(u.symbolically_equal(&DimExpr::rational(q(3, 2))));
    }

    #[test]
    fn certified_ordering() {
        let a = DimExpr::Log(LogExpr::log_of(2, 3));
        let b = DimExpr::Log(LogExpr::log_of(3, 5));
        assert_eq!(a.certified_cmp(&b, 256), Some(Ordering::Less));
        let c = DimExpr::Log(LogExpr::log_of(4, 9));
        assert_eq!(a.certified_cmp(&c, 64), Some(Ordering::Equal));
        let m = DimExpr::max_of([a.clone(), b.clone(), DimExpr::rational(q(1, 2))]);
        assert!(m.symbolically_equal(&b));
    }
}
