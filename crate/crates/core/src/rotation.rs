//! Rotation by `θ = log m2 / log m1` on the circle `[0, 1)`, the coding of
//! orbits against the interval `[1 − θ, 1)`, visit counts and the adaptive
//! partitions they induce.
//!
//! Positions are exact forms `a + bθ` with rational `a` and integer `b`.
//! Every membership decision is made with certified enclosures of `θ`,
//! refined until strict. Long scans use a 96-bit fixed-point fast path
//! whose error is tracked explicitly; any undecided step falls back to the
//! exact path.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{CoreError, Result};
use crate::numeric::{ceil_q, floor_q, ln_enclosure, multiplicative_relation, pow_u, Interval, Q};

/// Highest precision tried before a comparison is reported as undecided.
pub const MAX_ANGLE_BITS: u32 = 2048;

const FIX: u32 = 96;

/// The angle `log m2 / log m1` with an exact rationality verdict.
#[derive(Clone, Debug)]
pub struct LogRatioAngle {
    pub m1: u64,
    pub m2: u64,
    rational: Option<Q>,
    coarse: Interval,
    fine: Interval,
}

impl PartialEq for LogRatioAngle {
    fn eq(&self, o: &Self) -> bool {
        self.m1 == o.m1 && self.m2 == o.m2
    }
}
impl Eq for LogRatioAngle {}

fn theta_enclosure(m1: u64, m2: u64, bits: u32) -> Interval {
    let a = ln_enclosure(&BigUint::from(m2), bits + 8);
    let b = ln_enclosure(&BigUint::from(m1), bits + 8);
    a.div(&b).unwrap().round_outward(bits + 2)
}

/// Build the angle for bases `m1 > m2 >= 2`.
pub fn theta_of(m1: u64, m2: u64) -> Result<LogRatioAngle> {
    if m1 < 2 {
        return Err(CoreError::InvalidBase(m1));
    }
    if m2 < 2 {
        return Err(CoreError::InvalidBase(m2));
    }
    if m1 <= m2 {
        return Err(CoreError::InvalidArgument(format!(
            "angle needs m1 > m2, got ({}, {})",
            m1, m2
        )));
    }
    let rational = multiplicative_relation(m1, m2)
        .map(|(i1, i2)| Q::new(BigInt::from(i2), BigInt::from(i1)));
    let (coarse, fine) = match &rational {
        Some(r) => (Interval::point(r.clone()), Interval::point(r.clone())),
        None => (theta_enclosure(m1, m2, 160), theta_enclosure(m1, m2, 1100)),
    };
    Ok(LogRatioAngle { m1, m2, rational, coarse, fine })
}

impl LogRatioAngle {
    pub fn is_rational(&self) -> bool {
        self.rational.is_some()
    }

    pub fn rational_value(&self) -> Option<&Q> {
        self.rational.as_ref()
    }

    /// Enclosure with width at most `2^-bits` (exact point if rational).
    pub fn enclosure(&self, bits: u32) -> Interval {
        if let Some(r) = &self.rational {
            return Interval::point(r.clone());
        }
        if bits <= 150 {
            self.coarse.clone()
        } else if bits <= 1090 {
            self.fine.clone()
        } else {
            theta_enclosure(self.m1, self.m2, bits)
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.coarse.mid_f64()
    }

    /// Certified sign of `a + bθ`.
    pub fn sign_of(&self, a: &Q, b: i64) -> Result<Ordering> {
        if b == 0 {
            return Ok(a.cmp(&Q::zero()));
        }
        if let Some(r) = &self.rational {
            let v = a + r * Q::from_integer(BigInt::from(b));
            return Ok(v.cmp(&Q::zero()));
        }
        // b != 0 and θ irrational: the value is irrational, hence nonzero,
        // so refinement terminates in exact arithmetic.
        let bq = Q::from_integer(BigInt::from(b));
        let mut bits = 64;
        loop {
            let th = self.enclosure(bits);
            let v = th.scale(&bq).add(&Interval::point(a.clone()));
            if let Some(o) = v.cmp_q(&Q::zero()) {
                return Ok(o);
            }
            if bits >= MAX_ANGLE_BITS {
                return Err(CoreError::PrecisionExhausted {
                    bits,
                    what: format!("sign of {} + {}*theta", a, b),
                });
            }
            bits *= 2;
        }
    }

    /// Certified `floor(a + bθ)`.
    pub fn floor_of(&self, a: &Q, b: i64) -> Result<BigInt> {
        if b == 0 {
            return Ok(floor_q(a));
        }
        if let Some(r) = &self.rational {
            return Ok(floor_q(&(a + r * Q::from_integer(BigInt::from(b)))));
        }
        let th = self.enclosure(128);
        let v = th.scale(&Q::from_integer(BigInt::from(b))).add(&Interval::point(a.clone()));
        let mut f = floor_q(&v.lo);
        if f == floor_q(&v.hi) {
            return Ok(f);
        }
        // Settle f <= value < f + 1 with certified signs.
        while self.sign_of(&(a - Q::from_integer(f.clone())), b)? == Ordering::Less {
            f -= 1;
        }
        while self.sign_of(&(a - Q::from_integer(&f + 1)), b)? != Ordering::Less {
            f += 1;
        }
        Ok(f)
    }
}

/// A point `a + bθ` of the circle, always reduced into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnglePoint {
    pub a: Q,
    pub b: i64,
}

impl AnglePoint {
    /// Reduce `a + bθ` modulo 1.
    pub fn new(angle: &LogRatioAngle, a: Q, b: i64) -> Result<Self> {
        let f = angle.floor_of(&a, b)?;
        Ok(AnglePoint { a: a - Q::from_integer(f), b })
    }

    pub fn rational(angle: &LogRatioAngle, t: Q) -> Result<Self> {
        Self::new(angle, t, 0)
    }

    pub fn zero() -> Self {
        AnglePoint { a: Q::zero(), b: 0 }
    }

    /// The left endpoint `1 − θ` of the coding interval.
    pub fn one_minus_theta(angle: &LogRatioAngle) -> Result<Self> {
        Self::new(angle, Q::one(), -1)
    }

    pub fn enclosure(&self, angle: &LogRatioAngle, bits: u32) -> Interval {
        angle
            .enclosure(bits + 64)
            .scale(&Q::from_integer(BigInt::from(self.b)))
            .add(&Interval::point(self.a.clone()))
    }

    pub fn to_f64(&self, angle: &LogRatioAngle) -> f64 {
        self.enclosure(angle, 64).mid_f64()
    }

    /// Certified comparison of two circle points as numbers in `[0, 1)`.
    pub fn cmp_point(&self, o: &AnglePoint, angle: &LogRatioAngle) -> Result<Ordering> {
        angle.sign_of(&(&self.a - &o.a), self.b - o.b)
    }

    /// `R_θ(t) = t + θ mod 1`.
    pub fn rotate(&self, angle: &LogRatioAngle) -> Result<Self> {
        Self::new(angle, self.a.clone(), self.b + 1)
    }

    /// Whether the point lies in `[1 − θ, 1)`.
    pub fn in_coding_interval(&self, angle: &LogRatioAngle) -> Result<bool> {
        // t >= 1 − θ  <=>  (a − 1) + (b + 1)θ >= 0.
        Ok(angle.sign_of(&(&self.a - Q::one()), self.b + 1)? != Ordering::Less)
    }
}

/// Coding prefix `(v_t(0), …, v_t(k−1))`, decided by certified comparisons
/// along the exact orbit.
pub fn rotation_code_prefix(t: &AnglePoint, angle: &LogRatioAngle, k: usize) -> Result<Vec<u8>> {
    if let Some(word) = fast_code_prefix(t, angle, k) {
        return Ok(word);
    }
    let mut out = Vec::with_capacity(k);
    let mut x = t.clone();
    for _ in 0..k {
        let v = x.in_coding_interval(angle)?;
        out.push(v as u8);
        x = AnglePoint { a: if v { &x.a - Q::one() } else { x.a.clone() }, b: x.b + 1 };
    }
    Ok(out)
}

/// Number of ones in the coding prefix of length `k`.
pub fn r_k(t: &AnglePoint, angle: &LogRatioAngle, k: usize) -> Result<u64> {
    let word = rotation_code_prefix(t, angle, k)?;
    Ok(word.iter().map(|&v| v as u64).sum())
}

/// `⌊t + kθ⌋ − ⌊t⌋`, evaluated independently of the coding walk.
pub fn carry_count(t: &AnglePoint, angle: &LogRatioAngle, k: u64) -> Result<u64> {
    let k = i64::try_from(k).map_err(|_| CoreError::Overflow(format!("depth {}", k)))?;
    let hi = angle.floor_of(&t.a, t.b + k)?;
    let lo = angle.floor_of(&t.a, t.b)?;
    (hi - lo)
        .to_u64()
        .ok_or_else(|| CoreError::Overflow("negative carry count".into()))
}

// ---------------------------------------------------------------------------
// Fixed-point fast path.

#[derive(Clone, Copy, Debug)]
struct Fixed {
    lo: i128,
    hi: i128,
}

fn fixed_of(iv: &Interval) -> Option<Fixed> {
    let s = Q::from_integer(BigInt::one() << FIX as usize);
    let lo = floor_q(&(&iv.lo * &s)).to_i128()?;
    let hi = ceil_q(&(&iv.hi * &s)).to_i128()?;
    Some(Fixed { lo, hi })
}

struct FastAngle {
    theta: Fixed,
    one_minus: Fixed,
}

impl FastAngle {
    fn new(angle: &LogRatioAngle) -> Option<Self> {
        let theta = fixed_of(&angle.enclosure(140))?;
        let one = 1i128 << FIX;
        Some(FastAngle { theta, one_minus: Fixed { lo: one - theta.hi, hi: one - theta.lo } })
    }
}

fn fast_code_prefix(t: &AnglePoint, angle: &LogRatioAngle, k: usize) -> Option<Vec<u8>> {
    let fa = FastAngle::new(angle)?;
    let mut x = fixed_of(&t.enclosure(angle, 140))?;
    let one = 1i128 << FIX;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let v = if x.lo >= fa.one_minus.hi {
            1
        } else if x.hi < fa.one_minus.lo {
            0
        } else {
            return None;
        };
        out.push(v);
        x.lo += fa.theta.lo - if v == 1 { one } else { 0 };
        x.hi += fa.theta.hi - if v == 1 { one } else { 0 };
    }
    Some(out)
}

/// Outcome of scanning one base point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanLine {
    /// Certified upper bound on `max_{1<=k<=K} |r_k(t) − kθ|`.
    pub max_remainder: f64,
    /// Depth at which the maximum bound was attained.
    pub argmax_k: u64,
    /// Whether every `r_k` from the coding walk matched the carry identity.
    pub carry_identity_holds: bool,
    /// Whether the fast path had to be abandoned for the exact one.
    pub used_exact_path: bool,
}

/// Walk `K` steps from `t`, comparing the coding count with the carry
/// identity and tracking the largest remainder.
pub fn scan_base_point(t: &AnglePoint, angle: &LogRatioAngle, big_k: u64) -> Result<ScanLine> {
    if let Some(line) = scan_fast(t, angle, big_k) {
        return Ok(line);
    }
    scan_exact(t, angle, big_k)
}

fn scan_fast(t: &AnglePoint, angle: &LogRatioAngle, big_k: u64) -> Option<ScanLine> {
    let fa = FastAngle::new(angle)?;
    let t0 = fixed_of(&t.enclosure(angle, 140))?;
    let one = 1i128 << FIX;
    let floor_fix = |v: i128| v.div_euclid(one);
    let f0 = floor_fix(t0.lo);
    if f0 != floor_fix(t0.hi) {
        return None;
    }
    let mut x = t0;
    let mut r: i128 = 0;
    let mut best: i128 = 0;
    let mut best_k = 0;
    let mut ok = true;
    for n in 0..big_k as i128 {
        let v = if x.lo >= fa.one_minus.hi {
            1
        } else if x.hi < fa.one_minus.lo {
            0
        } else {
            return None;
        };
        r += v;
        x.lo += fa.theta.lo - v * one;
        x.hi += fa.theta.hi - v * one;
        let k = n + 1;
        // Carry identity on the unreduced sum t + kθ.
        let s_lo = t0.lo + k * fa.theta.lo;
        let s_hi = t0.hi + k * fa.theta.hi;
        let (c_lo, c_hi) = (floor_fix(s_lo), floor_fix(s_hi));
        if c_lo != c_hi {
            return None;
        }
        if c_lo - f0 != r {
            ok = false;
        }
        let dev_a = r * one - k * fa.theta.hi;
        let dev_b = r * one - k * fa.theta.lo;
        let dev = dev_a.abs().max(dev_b.abs());
        if dev > best {
            best = dev;
            best_k = k as u64;
        }
    }
    Some(ScanLine {
        max_remainder: (best as f64) / (one as f64),
        argmax_k: best_k,
        carry_identity_holds: ok,
        used_exact_path: false,
    })
}

fn scan_exact(t: &AnglePoint, angle: &LogRatioAngle, big_k: u64) -> Result<ScanLine> {
    let mut x = t.clone();
    let mut r: u64 = 0;
    let mut best = 0f64;
    let mut best_k = 0;
    let mut ok = true;
    let base_floor = angle.floor_of(&t.a, t.b)?;
    let th = angle.enclosure(160);
    for k in 1..=big_k {
        let v = x.in_coding_interval(angle)?;
        r += v as u64;
        x = AnglePoint { a: if v { &x.a - Q::one() } else { x.a.clone() }, b: x.b + 1 };
        let carry = angle.floor_of(&t.a, t.b + k as i64)? - &base_floor;
        if carry != BigInt::from(r) {
            ok = false;
        }
        let kq = Q::from_integer(BigInt::from(k));
        let dev = Interval::point(Q::from_integer(BigInt::from(r))).sub(&th.scale(&kq));
        let d = crate::numeric::to_f64(&dev.lo.abs().max(dev.hi.abs()));
        if d > best {
            best = d;
            best_k = k;
        }
    }
    Ok(ScanLine { max_remainder: best, argmax_k: best_k, carry_identity_holds: ok, used_exact_path: true })
}

/// Aggregate of a remainder scan over a grid of base points.
#[derive(Clone, Debug, PartialEq)]
pub struct RemainderScan {
    pub max_remainder: f64,
    pub argmax_t: Q,
    pub argmax_k: u64,
    pub points: u64,
    pub carry_identity_holds: bool,
    pub exact_fallbacks: u64,
}

impl RemainderScan {
    pub fn empty() -> Self {
        RemainderScan {
            max_remainder: 0.0,
            argmax_t: Q::zero(),
            argmax_k: 0,
            points: 0,
            carry_identity_holds: true,
            exact_fallbacks: 0,
        }
    }

    pub fn absorb(&mut self, t: &Q, line: &ScanLine, big_k: u64) {
        if line.max_remainder > self.max_remainder {
            self.max_remainder = line.max_remainder;
            self.argmax_t = t.clone();
            self.argmax_k = line.argmax_k;
        }
        self.points += big_k;
        self.carry_identity_holds &= line.carry_identity_holds;
        self.exact_fallbacks += line.used_exact_path as u64;
    }

    /// Combine two partial scans; ties keep the smaller `t`.
    pub fn merge(mut self, o: RemainderScan) -> RemainderScan {
        if o.max_remainder > self.max_remainder
            || (o.max_remainder == self.max_remainder && o.argmax_t < self.argmax_t)
        {
            self.max_remainder = o.max_remainder;
            self.argmax_t = o.argmax_t;
            self.argmax_k = o.argmax_k;
        }
        self.points += o.points;
        self.carry_identity_holds &= o.carry_identity_holds;
        self.exact_fallbacks += o.exact_fallbacks;
        self
    }
}

/// `max |r_k(t) − kθ|` over `1 <= k <= K` and the given rational grid.
pub fn remainder_bound_scan(angle: &LogRatioAngle, big_k: u64, t_grid: &[Q]) -> Result<RemainderScan> {
    let mut acc = RemainderScan::empty();
    for t in t_grid {
        let p = AnglePoint::rational(angle, t.clone())?;
        let line = scan_base_point(&p, angle, big_k)?;
        acc.absorb(t, &line, big_k);
    }
    Ok(acc)
}

/// Cell shape `m1^{-r} × m2^{-k}` of the adaptive partition at depth `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptivePartitionShape {
    pub m1: u64,
    pub m2: u64,
    pub k: u32,
    pub r: u32,
}

impl AdaptivePartitionShape {
    pub fn cell_width(&self) -> Q {
        Q::new(BigInt::one(), BigInt::from(pow_u(self.m1, self.r)))
    }

    pub fn cell_height(&self) -> Q {
        Q::new(BigInt::one(), BigInt::from(pow_u(self.m2, self.k)))
    }

    /// `width / height = m1^{-r} m2^{k}`.
    pub fn aspect(&self) -> Q {
        self.cell_width() / self.cell_height()
    }
}

pub fn adaptive_partition_shape(t: &AnglePoint, angle: &LogRatioAngle, k: u32) -> Result<AdaptivePartitionShape> {
    let r = r_k(t, angle, k as usize)? as u32;
    Ok(AdaptivePartitionShape { m1: angle.m1, m2: angle.m2, k, r })
}

/// Half-open arc `[start, end)`; the last one ends at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AngleInterval {
    pub start: AnglePoint,
    /// `None` stands for the right end 1.
    pub end: Option<AnglePoint>,
}

impl AngleInterval {
    pub fn contains(&self, t: &AnglePoint, angle: &LogRatioAngle) -> Result<bool> {
        if t.cmp_point(&self.start, angle)? == Ordering::Less {
            return Ok(false);
        }
        match &self.end {
            None => Ok(true),
            Some(e) => Ok(t.cmp_point(e, angle)? == Ordering::Less),
        }
    }

    pub fn length(&self, angle: &LogRatioAngle, bits: u32) -> Interval {
        let end = match &self.end {
            Some(e) => e.enclosure(angle, bits),
            None => Interval::point(Q::one()),
        };
        end.sub(&self.start.enclosure(angle, bits))
    }
}

/// The partition of `[0, 1)` into maximal arcs on which the length-`k`
/// coding prefix is constant. Its endpoints are the points `{−jθ}`,
/// `0 <= j <= k`.
pub fn c_k_intervals(angle: &LogRatioAngle, k: usize) -> Result<Vec<AngleInterval>> {
    let mut pts: Vec<AnglePoint> = Vec::with_capacity(k + 1);
    for j in 0..=k as i64 {
        pts.push(AnglePoint::new(angle, Q::zero(), -j)?);
    }
    let mut err = None;
    pts.sort_by(|x, y| match x.cmp_point(y, angle) {
        Ok(o) => o,
        Err(e) => {
            err = Some(e);
            Ordering::Equal
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut uniq: Vec<AnglePoint> = Vec::with_capacity(pts.len());
    for p in pts {
        match uniq.last() {
            Some(l) if l.cmp_point(&p, angle)? == Ordering::Equal => {}
            _ => uniq.push(p),
        }
    }
    let n = uniq.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(AngleInterval { start: uniq[i].clone(), end: uniq.get(i + 1).cloned() });
    }
    Ok(out)
}

/// Star discrepancy of a finite point set in `[0, 1)`.
pub fn star_discrepancy(points: &mut [f64]) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    points
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf))
        .fold(0.0, f64::max)
}

/// Orbit `R_θ^i(t)`, `0 <= i < n`, as floats (for discrepancy diagnostics).
pub fn orbit_f64(t: &AnglePoint, angle: &LogRatioAngle, n: usize) -> Vec<f64> {
    let th = angle.to_f64();
    let mut x = t.to_f64(angle);
    let mut out = Vec::with_capacity(n);
    // Recompute from the exact form every 1024 steps to keep drift tiny.
    for i in 0..n {
        if i % 1024 == 0 {
            let p = AnglePoint { a: t.a.clone(), b: t.b + i as i64 };
            let v = p.to_f64(angle);
            x = v - libm::floor(v);
        }
        out.push(x);
        x += th;
        if x >= 1.0 {
            x -= 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    fn a32() -> LogRatioAngle {
        theta_of(3, 2).unwrap()
    }

    #[test]
    fn rationality_verdicts() {
        assert!(theta_of(4, 2).unwrap().is_rational());
        assert_eq!(theta_of(8, 4).unwrap().rational_value(), Some(&q(2, 3)));
        assert!(!theta_of(3, 2).unwrap().is_rational());
        assert!(!theta_of(12, 6).unwrap().is_rational());
        assert!(theta_of(2, 3).is_err());
        assert!(theta_of(1, 1).is_err());
    }

    #[test]
    fn enclosure_is_tight() {
        let a = a32();
        let iv = a.enclosure(64);
        assert!(iv.width_f64() <= libm::exp2(-64.0));
        assert!((iv.mid_f64() - libm::log(2.0) / libm::log(3.0)).abs() < 1e-15);
    }

    #[test]
    fn coding_examples() {
        let a = a32();
        let t0 = AnglePoint::zero();
        assert_eq!(rotation_code_prefix(&t0, &a, 1).unwrap(), [0]);
        let t = AnglePoint::rational(&a, q(1, 5)).unwrap();
        assert_eq!(rotation_code_prefix(&t, &a, 2).unwrap(), [0, 1]);
        assert_eq!(r_k(&t, &a, 2).unwrap(), 1);
        let edge = AnglePoint::one_minus_theta(&a).unwrap();
        assert_eq!(rotation_code_prefix(&edge, &a, 1).unwrap(), [1]);
        assert_eq!(r_k(&t0, &a, 5).unwrap(), 3);
        assert_eq!(r_k(&t0, &a, 0).unwrap(), 0);
    }

    #[test]
    fn carry_identity_matches_coding() {
        let a = a32();
        for num in 0..40 {
            let t = AnglePoint::rational(&a, q(num, 40)).unwrap();
            for k in [1u64, 2, 7, 30, 100] {
                assert_eq!(r_k(&t, &a, k as usize).unwrap(), carry_count(&t, &a, k).unwrap());
            }
        }
    }

    #[test]
    fn exact_path_agrees_with_fast_path() {
        let a = a32();
        for num in [0, 3, 17, 999] {
            let t = AnglePoint::rational(&a, q(num, 1000)).unwrap();
            let f = scan_fast(&t, &a, 300).unwrap();
            let e = scan_exact(&t, &a, 300).unwrap();
            assert!(f.carry_identity_holds && e.carry_identity_holds);
            assert!((f.max_remainder - e.max_remainder).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_angle_uses_exact_arithmetic() {
        let a = theta_of(4, 2).unwrap();
        let t = AnglePoint::zero();
        // θ = 1/2: orbit 0, 1/2, 0, 1/2, … and 1 − θ = 1/2.
        assert_eq!(rotation_code_prefix(&t, &a, 4).unwrap(), [0, 1, 0, 1]);
        assert_eq!(c_k_intervals(&a, 5).unwrap().len(), 2);
    }

    #[test]
    fn remainder_small_scan() {
        let a = a32();
        let grid: Vec<Q> = (0..20).map(|i| q(i, 20)).collect();
        let s = remainder_bound_scan(&a, 2000, &grid).unwrap();
        assert!(s.max_remainder < 2.0);
        assert!(s.carry_identity_holds);
        let s1 = remainder_bound_scan(&a, 1, &grid).unwrap();
        assert!(s1.max_remainder < 1.0);
    }

    #[test]
    fn c_k_partition_has_k_plus_one_cells() {
        let a = a32();
        let c1 = c_k_intervals(&a, 1).unwrap();
        assert_eq!(c1.len(), 2);
        assert_eq!(c1[1].start, AnglePoint::one_minus_theta(&a).unwrap());
        for k in 1..=20 {
            let cells = c_k_intervals(&a, k).unwrap();
            assert_eq!(cells.len(), k + 1);
            let total = cells.iter().fold(Interval::point(Q::zero()), |acc, c| acc.add(&c.length(&a, 100)));
            assert!(total.contains(&Q::one()) && total.width_f64() < 1e-20);
        }
    }

    #[test]
    fn shape_examples() {
        let a = a32();
        let s = adaptive_partition_shape(&AnglePoint::zero(), &a, 5).unwrap();
        assert_eq!((s.r, s.k), (3, 5));
        assert_eq!(s.cell_width(), q(1, 27));
        assert_eq!(s.cell_height(), q(1, 32));
        let s0 = adaptive_partition_shape(&AnglePoint::zero(), &a, 0).unwrap();
        assert_eq!(s0.cell_width(), Q::one());
    }

    #[test]
    fn discrepancy_of_regular_grid() {
        let mut pts: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert!((star_discrepancy(&mut pts) - 0.1).abs() < 1e-12);
    }
}
