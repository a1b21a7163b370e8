//! Symbol sequences, cylinders, the coded product space and its projection
//! to the unit square.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{CoreError, Result};
use crate::numeric::{pow_u, Q};
use crate::rotation::{AnglePoint, LogRatioAngle};

/// A digit pair `(x, y)` of the product alphabet.
pub type Pair = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
enum Source {
    Constant(u32),
    Periodic { prefix: Vec<u32>, period: Vec<u32> },
    /// Cumulative thresholds on `[0, 2^64)`; the last is `2^64`.
    Bernoulli { cum: Vec<u128>, seed: u64 },
}

/// An infinite, deterministic, randomly indexable symbol sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSequence {
    alphabet: u32,
    source: Source,
    offset: u64,
}

/// How to build a [`SymbolSequence`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequenceSpec {
    Constant { alphabet: u32, symbol: u32 },
    Periodic { alphabet: u32, prefix: Vec<u32>, period: Vec<u32> },
    Bernoulli { probabilities: Vec<Q>, seed: u64 },
}

fn check_symbol(s: u32, alphabet: u32) -> Result<()> {
    if s >= alphabet {
        Err(CoreError::SymbolOutOfRange { symbol: s, alphabet })
    } else {
        Ok(())
    }
}

/// Cumulative thresholds for sampling a symbol from one `u64` draw.
pub(crate) fn cumulative_thresholds(probabilities: &[Q]) -> Result<Vec<u128>> {
    let mut total = Q::zero();
    for p in probabilities {
        if *p < Q::zero() || *p > Q::one() {
            return Err(CoreError::ProbabilityOutOfRange(format!("{}", p)));
        }
        total += p;
    }
    if total != Q::one() {
        return Err(CoreError::ProbabilitySum(format!("{}", total)));
    }
    let scale = Q::from_integer(BigInt::one() << 64);
    let mut acc = Q::zero();
    let mut cum = Vec::with_capacity(probabilities.len());
    for p in probabilities {
        acc += p;
        cum.push((&acc * &scale).floor().to_integer().to_u128().unwrap());
    }
    Ok(cum)
}

pub(crate) fn pick(cum: &[u128], draw: u64) -> u32 {
    let d = draw as u128;
    cum.iter().position(|&c| d < c).unwrap_or(cum.len() - 1) as u32
}

pub fn make_sequence(spec: &SequenceSpec) -> Result<SymbolSequence> {
    let (alphabet, source) = match spec {
        SequenceSpec::Constant { alphabet, symbol } => {
            check_symbol(*symbol, *alphabet)?;
            (*alphabet, Source::Constant(*symbol))
        }
        SequenceSpec::Periodic { alphabet, prefix, period } => {
            if period.is_empty() {
                return Err(CoreError::EmptyPeriod);
            }
            for &s in prefix.iter().chain(period) {
                check_symbol(s, *alphabet)?;
            }
            (*alphabet, Source::Periodic { prefix: prefix.clone(), period: period.clone() })
        }
        SequenceSpec::Bernoulli { probabilities, seed } => {
            if probabilities.is_empty() {
                return Err(CoreError::InvalidArgument("empty probability vector".into()));
            }
            let cum = cumulative_thresholds(probabilities)?;
            (probabilities.len() as u32, Source::Bernoulli { cum, seed: *seed })
        }
    };
    if alphabet == 0 {
        return Err(CoreError::InvalidArgument("alphabet must be nonempty".into()));
    }
    Ok(SymbolSequence { alphabet, source, offset: 0 })
}

impl SymbolSequence {
    pub fn constant(alphabet: u32, symbol: u32) -> Result<Self> {
        make_sequence(&SequenceSpec::Constant { alphabet, symbol })
    }

    pub fn periodic(alphabet: u32, period: Vec<u32>) -> Result<Self> {
        make_sequence(&SequenceSpec::Periodic { alphabet, prefix: Vec::new(), period })
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn at(&self, i: u64) -> u32 {
        let j = i + self.offset;
        match &self.source {
            Source::Constant(s) => *s,
            Source::Periodic { prefix, period } => {
                let pl = prefix.len() as u64;
                if j < pl {
                    prefix[j as usize]
                } else {
                    period[((j - pl) % period.len() as u64) as usize]
                }
            }
            Source::Bernoulli { cum, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * j as u128);
                pick(cum, rng.next_u64())
            }
        }
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> Vec<u32> {
        match &self.source {
            Source::Bernoulli { cum, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * self.offset as u128);
                (0..n).map(|_| pick(cum, rng.next_u64())).collect()
            }
            _ => (0..n as u64).map(|i| self.at(i)).collect(),
        }
    }

    pub fn shift(&self, k: u64) -> SymbolSequence {
        let mut out = self.clone();
        out.offset += k;
        out
    }
}

/// Left shift by `k`.
pub fn shift(seq: &SymbolSequence, k: u64) -> SymbolSequence {
    seq.shift(k)
}

/// Shift `omega` by one exactly when `t ∈ [1 − θ, 1)`.
pub fn sigma_t(t: &AnglePoint, angle: &LogRatioAngle, omega: &SymbolSequence) -> Result<SymbolSequence> {
    Ok(if t.in_coding_interval(angle)? { omega.shift(1) } else { omega.clone() })
}

/// A finite word over the product alphabet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder {
    pub word: Vec<Pair>,
}

impl Cylinder {
    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

/// `[index / base^depth, (index + 1) / base^depth]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitInterval {
    pub base: u64,
    pub depth: u32,
    pub index: BigUint,
}

impl DigitInterval {
    pub fn lower(&self) -> Q {
        Q::new(BigInt::from(self.index.clone()), BigInt::from(pow_u(self.base, self.depth)))
    }

    pub fn width(&self) -> Q {
        Q::new(BigInt::one(), BigInt::from(pow_u(self.base, self.depth)))
    }

    pub fn upper(&self) -> Q {
        self.lower() + self.width()
    }
}

/// The interval of all points whose base-`m` expansion starts with `word`.
pub fn pi_base_cylinder(m: u64, word: &[u32]) -> Result<DigitInterval> {
    let mut index = BigUint::zero();
    for &d in word {
        if d as u64 >= m {
            return Err(CoreError::SymbolOutOfRange { symbol: d, alphabet: m as u32 });
        }
        index = index * m + d;
    }
    Ok(DigitInterval { base: m, depth: word.len() as u32, index })
}

/// Closed axis-parallel rectangle with exact corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: Q,
    pub x1: Q,
    pub y0: Q,
    pub y1: Q,
}

impl Rect {
    pub fn from_intervals(x: &DigitInterval, y: &DigitInterval) -> Rect {
        Rect { x0: x.lower(), x1: x.upper(), y0: y.lower(), y1: y.upper() }
    }

    pub fn width(&self) -> Q {
        &self.x1 - &self.x0
    }

    pub fn height(&self) -> Q {
        &self.y1 - &self.y0
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.x0 <= o.x0 && o.x1 <= self.x1 && self.y0 <= o.y0 && o.y1 <= self.y1
    }
}

/// One refinement step of a cover schedule: which axes gain a digit and
/// which digit pairs are allowed (a pair's coordinate is ignored on an axis
/// that is not refined).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverStep {
    pub refine_x: bool,
    pub refine_y: bool,
    pub pairs: Vec<Pair>,
}

/// A grid-aligned closed rectangle `[ax, ax+1]/mx^ex × [ay, ay+1]/my^ey`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridRect {
    pub ax: u128,
    pub ex: u32,
    pub ay: u128,
    pub ey: u32,
}

impl GridRect {
    pub const UNIT: GridRect = GridRect { ax: 0, ex: 0, ay: 0, ey: 0 };

    pub fn rect(&self, mx: u64, my: u64) -> Rect {
        let wx = BigInt::from(pow_u(mx, self.ex));
        let wy = BigInt::from(pow_u(my, self.ey));
        Rect {
            x0: Q::new(BigInt::from(self.ax), wx.clone()),
            x1: Q::new(BigInt::from(self.ax + 1), wx),
            y0: Q::new(BigInt::from(self.ay), wy.clone()),
            y1: Q::new(BigInt::from(self.ay + 1), wy),
        }
    }

    /// Child rectangle after one step with digit pair `(x, y)`.
    pub fn child(&self, step: &CoverStep, (x, y): Pair, mx: u64, my: u64) -> Result<GridRect> {
        let ovf = || CoreError::Overflow("grid index exceeds u128".into());
        let mut out = *self;
        if step.refine_x {
            out.ax = out.ax.checked_mul(mx as u128).and_then(|v| v.checked_add(x as u128)).ok_or_else(ovf)?;
            out.ex += 1;
        }
        if step.refine_y {
            out.ay = out.ay.checked_mul(my as u128).and_then(|v| v.checked_add(y as u128)).ok_or_else(ovf)?;
            out.ey += 1;
        }
        Ok(out)
    }
}

/// Distinct digit pairs of a step, deduplicated on the refined axes.
pub fn effective_pairs(step: &CoverStep) -> Vec<Pair> {
    let mut v: Vec<Pair> = step
        .pairs
        .iter()
        .map(|&(x, y)| (if step.refine_x { x } else { 0 }, if step.refine_y { y } else { 0 }))
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Depth-first enumeration of the leaves of a cover schedule. `keep` is
/// consulted on every node (including the root) and prunes its subtree
/// when it returns `false`.
pub fn enumerate_cover(
    mx: u64,
    my: u64,
    steps: &[CoverStep],
    keep: &mut dyn FnMut(&GridRect) -> bool,
) -> Result<Vec<GridRect>> {
    let pairs: Vec<Vec<Pair>> = steps.iter().map(effective_pairs).collect();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, GridRect::UNIT)];
    while let Some((d, node)) = stack.pop() {
        if !keep(&node) {
            continue;
        }
        if d == steps.len() {
            out.push(node);
            continue;
        }
        for &p in pairs[d].iter().rev() {
            stack.push((d + 1, node.child(&steps[d], p, mx, my)?));
        }
    }
    Ok(out)
}

/// Digits allowed at one coordinate of the coded product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedStep {
    pub tau: u8,
    pub xs: Vec<u32>,
    pub ys: Vec<u32>,
}

/// The set of sequences whose `p`-th coordinate is drawn from
/// `Γ_{ω[r]} × Λ_{η[p]}` when `τ(p) = 1` (with `r` the number of earlier
/// ones in `τ`) and from `{1} × Λ_{η[p]}` when `τ(p) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedProduct {
    pub m1: u64,
    pub m2: u64,
    /// Finite prefix of the coding sequence; depths beyond it are errors.
    pub tau: Vec<u8>,
    pub omega: SymbolSequence,
    pub eta: SymbolSequence,
    pub gammas: Vec<Vec<u32>>,
    pub lambdas: Vec<Vec<u32>>,
}

fn check_fibers(fibers: &[Vec<u32>], base: u64) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::with_capacity(fibers.len());
    for (i, f) in fibers.iter().enumerate() {
        if f.is_empty() {
            return Err(CoreError::EmptyFiber(i as u32));
        }
        let mut g = f.clone();
        g.sort_unstable();
        g.dedup();
        for &d in &g {
            if d as u64 >= base {
                return Err(CoreError::SymbolOutOfRange { symbol: d, alphabet: base as u32 });
            }
        }
        out.push(g);
    }
    Ok(out)
}

impl CodedProduct {
    pub fn new(
        m1: u64,
        m2: u64,
        tau: Vec<u8>,
        omega: SymbolSequence,
        eta: SymbolSequence,
        gammas: Vec<Vec<u32>>,
        lambdas: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if m1 < 2 {
            return Err(CoreError::InvalidBase(m1));
        }
        if m2 < 2 {
            return Err(CoreError::InvalidBase(m2));
        }
        if tau.iter().any(|&b| b > 1) {
            return Err(CoreError::InvalidArgument("coding sequence must be binary".into()));
        }
        let gammas = check_fibers(&gammas, m1)?;
        let lambdas = check_fibers(&lambdas, m2)?;
        Ok(CodedProduct { m1, m2, tau, omega, eta, gammas, lambdas })
    }

    /// Allowed digits at coordinates `0..k`.
    pub fn steps(&self, k: usize) -> Result<Vec<CodedStep>> {
        if k > self.tau.len() {
            return Err(CoreError::InsufficientDepth { need: k, have: self.tau.len() });
        }
        let ones = self.tau[..k].iter().filter(|&&b| b == 1).count();
        let om = self.omega.prefix(ones);
        let et = self.eta.prefix(k);
        let mut rank = 0usize;
        let mut out = Vec::with_capacity(k);
        for p in 0..k {
            let j = et[p] as usize;
            let ys = self
                .lambdas
                .get(j)
                .ok_or_else(|| CoreError::InvalidArgument(format!("no fiber Λ_{}", j)))?
                .clone();
            let xs = if self.tau[p] == 1 {
                let i = om[rank] as usize;
                rank += 1;
                self.gammas
                    .get(i)
                    .ok_or_else(|| CoreError::InvalidArgument(format!("no fiber Γ_{}", i)))?
                    .clone()
            } else {
                vec![1]
            };
            out.push(CodedStep { tau: self.tau[p], xs, ys });
        }
        Ok(out)
    }

    /// Closed-form cylinder count at depth `k`.
    pub fn cylinder_count(&self, k: usize) -> Result<BigUint> {
        let steps = self.steps(k)?;
        Ok(steps
            .iter()
            .map(|s| BigUint::from(s.xs.len() * s.ys.len()))
            .fold(BigUint::one(), |a, b| a * b))
    }

    /// Number of ones among the first `k` coding symbols.
    pub fn r_of(&self, k: usize) -> u32 {
        self.tau[..k.min(self.tau.len())].iter().map(|&b| b as u32).sum()
    }
}

/// All depth-`k` cylinders, in lexicographic order.
pub fn coded_product_cylinders(cp: &CodedProduct, k: usize) -> Result<Vec<Cylinder>> {
    let steps = cp.steps(k)?;
    let mut words: Vec<Vec<Pair>> = vec![Vec::new()];
    for s in &steps {
        let mut next = Vec::with_capacity(words.len() * s.xs.len() * s.ys.len());
        for w in &words {
            for &x in &s.xs {
                for &y in &s.ys {
                    let mut v = w.clone();
                    v.push((x, y));
                    next.push(v);
                }
            }
        }
        words = next;
    }
    Ok(words.into_iter().map(|word| Cylinder { word }).collect())
}

/// Image of a cylinder under the coded projection: x digits are read only
/// at the ones of `τ`.
pub fn pi_coded_cylinder(cp: &CodedProduct, word: &[Pair]) -> Result<Rect> {
    let steps = cp.steps(word.len())?;
    let mut xs = Vec::new();
    let mut ys = Vec::with_capacity(word.len());
    for (p, (&(x, y), s)) in word.iter().zip(&steps).enumerate() {
        if !s.xs.contains(&x) || !s.ys.contains(&y) {
            return Err(CoreError::InvalidArgument(format!(
                "symbol ({}, {}) not allowed at coordinate {}",
                x, y, p
            )));
        }
        if s.tau == 1 {
            xs.push(x);
        }
        ys.push(y);
    }
    Ok(Rect::from_intervals(&pi_base_cylinder(cp.m1, &xs)?, &pi_base_cylinder(cp.m2, &ys)?))
}

/// Shannon entropy (natural log) of exact rational weights.
pub fn cylinder_entropy(weights: &[Q]) -> Result<f64> {
    let mut total = Q::zero();
    for w in weights {
        if *w < Q::zero() {
            return Err(CoreError::InvalidArgument(format!("negative weight {}", w)));
        }
        total += w;
    }
    if total != Q::one() {
        return Err(CoreError::ProbabilitySum(format!("{}", total)));
    }
    Ok(weights
        .iter()
        .filter(|w| !w.is_zero())
        .map(|w| {
            let p = crate::numeric::to_f64(w);
            -p * libm::log(p)
        })
        .sum())
}

/// Shannon entropy of floating weights summing to 1 within `1e-12`.
pub fn cylinder_entropy_f64(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| **w < 0.0) {
        return Err(CoreError::InvalidArgument(format!("negative weight {}", w)));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(CoreError::ProbabilitySum(format!("{}", total)));
    }
    Ok(weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * libm::log(w)).sum())
}

/// Distance `ρ^k` with `k` the first index where two prefixes differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DRho {
    pub value: Q,
    /// Set when the prefixes agree on the whole compared depth.
    pub equal_to_depth: bool,
    pub first_disagreement: Option<usize>,
}

pub fn d_rho<T: PartialEq>(x: &[T], y: &[T], rho: &Q) -> Result<DRho> {
    if *rho <= Q::zero() || *rho >= Q::one() {
        return Err(CoreError::InvalidArgument(format!("rho = {} not in (0, 1)", rho)));
    }
    let depth = x.len().min(y.len());
    match (0..depth).find(|&i| x[i] != y[i]) {
        Some(k) => Ok(DRho {
            value: num_traits::pow(rho.clone(), k),
            equal_to_depth: false,
            first_disagreement: Some(k),
        }),
        None => Ok(DRho { value: Q::zero(), equal_to_depth: true, first_disagreement: None }),
    }
}

/// Lexicographic comparison helper for words of pairs.
pub fn cmp_words(a: &[Pair], b: &[Pair]) -> Ordering {
    a.cmp(b)
}
