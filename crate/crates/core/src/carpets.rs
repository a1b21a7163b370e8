//! Carpets, their closed-form dimensions, the bound calculators and
//! finite-depth miniset covers.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{CoreError, Result};
use crate::numeric::{
    multiplicative_relation, pow_rational_enclosure, pow_u, DimExpr, Interval, LogExpr, Q,
};
use crate::symbolic::{enumerate_cover, CoverStep, GridRect, Pair, Rect, SymbolSequence};

/// A Bedford–McMullen carpet: exponents `m > n >= 2` and digit set `Γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Carpet {
    m: u64,
    n: u64,
    digits: BTreeSet<Pair>,
}

impl Carpet {
    pub fn new(m: u64, n: u64, digits: impl IntoIterator<Item = Pair>) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::InvalidBase(n));
        }
        if m <= n {
            return Err(CoreError::InvalidCarpet(format!("need m > n, got m={} n={}", m, n)));
        }
        let digits: BTreeSet<Pair> = digits.into_iter().collect();
        if digits.is_empty() {
            return Err(CoreError::InvalidCarpet("empty digit set".into()));
        }
        for &(i, j) in &digits {
            if i as u64 >= m || j as u64 >= n {
                return Err(CoreError::InvalidCarpet(format!(
                    "digit pair ({}, {}) outside [{}]x[{}]",
                    i, j, m, n
                )));
            }
        }
        let cols: BTreeSet<u32> = digits.iter().map(|p| p.0).collect();
        let rows: BTreeSet<u32> = digits.iter().map(|p| p.1).collect();
        if cols.len() < 2 || rows.len() < 2 {
            return Err(CoreError::InvalidCarpet(
                "digit set lies on a single horizontal or vertical line".into(),
            ));
        }
        Ok(Carpet { m, n, digits })
    }

    /// The full `m × n` carpet (the unit square).
    pub fn full(m: u64, n: u64) -> Result<Self> {
        let d: Vec<Pair> = (0..m as u32).flat_map(|i| (0..n as u32).map(move |j| (i, j))).collect();
        Carpet::new(m, n, d)
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn digits(&self) -> &BTreeSet<Pair> {
        &self.digits
    }

    /// Nonempty rows, ascending.
    pub fn rows(&self) -> Vec<u32> {
        let r: BTreeSet<u32> = self.digits.iter().map(|p| p.1).collect();
        r.into_iter().collect()
    }

    /// Nonempty columns, ascending.
    pub fn columns(&self) -> Vec<u32> {
        let c: BTreeSet<u32> = self.digits.iter().map(|p| p.0).collect();
        c.into_iter().collect()
    }

    pub fn contains_digit(&self, p: Pair) -> bool {
        self.digits.contains(&p)
    }

    /// Smallest `L` with `n^L >= m^k`: the row depth matching column depth `k`.
    pub fn matching_row_depth(&self, k: u32) -> u32 {
        let target = pow_u(self.m, k);
        let mut l = 0;
        let mut p = BigUint::one();
        while p < target {
            p *= self.n;
            l += 1;
        }
        l
    }

    /// Schedule for the cover by rectangles `m^-xd × n^-yd`.
    pub fn cover_schedule(&self, xd: u32, yd: u32) -> Vec<CoverStep> {
        let both: Vec<Pair> = self.digits.iter().copied().collect();
        let common = xd.min(yd);
        let mut steps: Vec<CoverStep> = (0..common)
            .map(|_| CoverStep { refine_x: true, refine_y: true, pairs: both.clone() })
            .collect();
        if xd > yd {
            let cols: Vec<Pair> = self.columns().into_iter().map(|i| (i, 0)).collect();
            steps.extend((yd..xd).map(|_| CoverStep { refine_x: true, refine_y: false, pairs: cols.clone() }));
        } else {
            let rows: Vec<Pair> = self.rows().into_iter().map(|j| (0, j)).collect();
            steps.extend((xd..yd).map(|_| CoverStep { refine_x: false, refine_y: true, pairs: rows.clone() }));
        }
        steps
    }

    /// Digit depths `(xd, yd)` whose cover cells have width `<= w` and
    /// height `<= h`.
    pub fn depths_for(&self, w: &Q, h: &Q) -> (u32, u32) {
        (min_depth(self.m, w), min_depth(self.n, h))
    }

    /// Whether the grid rectangle `(ax, ay)` at depths `(xd, yd)` is a cell
    /// of the cover given by [`Carpet::cover_schedule`]. Runs in
    /// `O(max(xd, yd))`.
    pub fn cover_contains(&self, ax: u128, xd: u32, ay: u128, yd: u32) -> bool {
        let m = self.m as u128;
        let n = self.n as u128;
        let xs = digits_of(ax, m, xd);
        let ys = digits_of(ay, n, yd);
        let (Some(xs), Some(ys)) = (xs, ys) else { return false };
        let common = xd.min(yd) as usize;
        for p in 0..common {
            if !self.digits.contains(&(xs[p], ys[p])) {
                return false;
            }
        }
        if xd > yd {
            let cols = self.columns();
            xs[common..].iter().all(|d| cols.binary_search(d).is_ok())
        } else {
            let rows = self.rows();
            ys[common..].iter().all(|d| rows.binary_search(d).is_ok())
        }
    }
}

/// Smallest `d` with `base^-d <= w` (for `w > 0`).
pub fn min_depth(base: u64, w: &Q) -> u32 {
    assert!(*w > Q::zero(), "cell size must be positive");
    let mut d = 0;
    let mut cell = Q::one();
    let b = Q::from_integer(BigInt::from(base));
    while &cell > w {
        cell /= &b;
        d += 1;
    }
    d
}

/// Base-`b` digits of `a` (most significant first) at exactly `d` places.
fn digits_of(mut a: u128, b: u128, d: u32) -> Option<Vec<u32>> {
    let mut out = vec![0u32; d as usize];
    for slot in out.iter_mut().rev() {
        *slot = (a % b) as u32;
        a /= b;
    }
    (a == 0).then_some(out)
}

/// Row fibers: `fibers(c)[j] = Γ_j = {i : (i, j) ∈ Γ}` for every `j < n`.
pub fn fibers(c: &Carpet) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); c.n as usize];
    for &(i, j) in &c.digits {
        out[j as usize].push(i);
    }
    out
}

/// The four dimension quantities of a carpet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionReport {
    pub dim_box: DimExpr,
    pub dim_hausdorff: DimExpr,
    pub dim_p2: DimExpr,
    pub dim_star: DimExpr,
}

impl DimensionReport {
    /// `dim_H <= dim_B <= dim* <= 2`, certified.
    pub fn ordering_holds(&self) -> bool {
        let two = DimExpr::rational(Q::from_integer(BigInt::from(2)));
        let le = |a: &DimExpr, b: &DimExpr| {
            matches!(a.certified_cmp(b, 512), Some(Ordering::Less) | Some(Ordering::Equal))
        };
        le(&self.dim_hausdorff, &self.dim_box) && le(&self.dim_box, &self.dim_star) && le(&self.dim_star, &two)
    }
}

pub fn dims(c: &Carpet) -> DimensionReport {
    let fib = fibers(c);
    let sizes: Vec<u64> = fib.iter().map(|f| f.len() as u64).collect();
    let rows = sizes.iter().filter(|&&s| s > 0).count() as u64;
    let max_fiber = *sizes.iter().max().unwrap();
    let p2 = LogExpr::log_of(rows, c.n);
    let dim_star = p2.add(&LogExpr::log_of(max_fiber, c.m));
    let dim_box = p2.add(&LogExpr::log_ratio(c.digits.len() as u64, rows, c.m));
    DimensionReport {
        dim_box: DimExpr::Log(dim_box),
        dim_hausdorff: DimExpr::mcmullen(c.m, c.n, &sizes),
        dim_p2: DimExpr::Log(p2),
        dim_star: DimExpr::Log(dim_star),
    }
}

/// Outcome of the incommensurability test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incommensurability {
    pub incommensurable: bool,
    /// First dependent pair, as `(name, value, name, value)`.
    pub witness: Option<(&'static str, u64, &'static str, u64)>,
}

pub fn is_incommensurable(f: &Carpet, e: &Carpet) -> Incommensurability {
    let pairs = [
        ("m1", f.m, "m2", e.m),
        ("m1", f.m, "n2", e.n),
        ("n1", f.n, "m2", e.m),
        ("n1", f.n, "n2", e.n),
    ];
    let witness = pairs.into_iter().find(|&(_, a, _, b)| multiplicative_relation(a, b).is_some());
    Incommensurability { incommensurable: witness.is_none(), witness }
}

/// A dimension bound together with any violated-hypothesis warnings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub value: DimExpr,
    pub warnings: Vec<String>,
}

fn exponent_warning(c: &Carpet, who: &str) -> Option<String> {
    multiplicative_relation(c.m, c.n).map(|_| {
        format!("{}: log {} / log {} is rational; the bound's hypothesis fails", who, c.m, c.n)
    })
}

/// `max{dim*(F) − 1, 0}`.
pub fn bound_slice_star(f: &Carpet) -> BoundReport {
    let d = dims(f);
    let value = DimExpr::Log(d.dim_star.as_log().unwrap().add_rational(&-Q::one())).clamp_zero();
    BoundReport { value, warnings: exponent_warning(f, "F").into_iter().collect() }
}

/// The alternative candidate `max{dim_H(F) − 1, 0}`, reported alongside the
/// proven bound without any claim that it holds.
pub fn bound_slice_hausdorff_candidate(f: &Carpet) -> DimExpr {
    dims(f).dim_hausdorff.add_rational(&-Q::one()).clamp_zero()
}

/// Orientation of the linear part of an affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Diagonal,
    Antidiagonal,
}

fn max_fiber_term(c: &Carpet) -> LogExpr {
    let max = fibers(c).iter().map(|f| f.len() as u64).max().unwrap();
    LogExpr::log_of(max, c.m)
}

/// Upper bound for `dim*(g(F) ∩ E)` with `g` diagonal or antidiagonal.
pub fn bound_intersection(f: &Carpet, e: &Carpet, orientation: Orientation) -> BoundReport {
    let mut warnings = Vec::new();
    let inc = is_incommensurable(f, e);
    if let Some((a, av, b, bv)) = inc.witness {
        warnings.push(format!(
            "carpets are not incommensurable: {}={} and {}={} are multiplicatively dependent",
            a, av, b, bv
        ));
    }
    let minus_one = -Q::one();
    let p2f = LogExpr::log_of(f.rows().len() as u64, f.n);
    let p2e = LogExpr::log_of(e.rows().len() as u64, e.n);
    let gf = max_fiber_term(f);
    let le = max_fiber_term(e);
    let (first, second) = match orientation {
        Orientation::Diagonal => (gf.add(&le), p2f.add(&p2e)),
        Orientation::Antidiagonal => (gf.add(&p2e), p2f.add(&le)),
    };
    let t1 = DimExpr::Log(first.add_rational(&minus_one)).clamp_zero();
    let t2 = DimExpr::Log(second.add_rational(&minus_one)).clamp_zero();
    BoundReport { value: t1.add(&t2), warnings }
}

/// Mode of [`bound_product_slice`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SliceMode {
    WorstCase,
    /// Row weights `α1` over the `Γ` family and `α2` over the `Λ` family.
    Bernoulli { alpha1: Vec<Q>, alpha2: Vec<Q> },
}

fn check_weights(w: &[Q], len: usize, name: &str) -> Result<()> {
    if w.len() != len {
        return Err(CoreError::InvalidArgument(format!("{} has {} weights for {} fibers", name, w.len(), len)));
    }
    if w.iter().any(|x| *x < Q::zero()) {
        return Err(CoreError::InvalidArgument(format!("{} has a negative weight", name)));
    }
    let s: Q = w.iter().cloned().sum();
    if s != Q::one() {
        return Err(CoreError::ProbabilitySum(format!("{}", s)));
    }
    Ok(())
}

/// Slice bound for the product of two fiber families.
pub fn bound_product_slice(
    gammas: &[Vec<u32>],
    lambdas: &[Vec<u32>],
    m1: u64,
    m2: u64,
    mode: &SliceMode,
) -> Result<DimExpr> {
    for (i, g) in gammas.iter().enumerate() {
        if g.is_empty() {
            return Err(CoreError::EmptyFiber(i as u32));
        }
    }
    for (j, l) in lambdas.iter().enumerate() {
        if l.is_empty() {
            return Err(CoreError::EmptyFiber(j as u32));
        }
    }
    let term = match mode {
        SliceMode::WorstCase => {
            let gm = gammas.iter().map(|g| g.len() as u64).max().unwrap();
            let lm = lambdas.iter().map(|l| l.len() as u64).max().unwrap();
            LogExpr::log_of(gm, m1).add(&LogExpr::log_of(lm, m2))
        }
        SliceMode::Bernoulli { alpha1, alpha2 } => {
            check_weights(alpha1, gammas.len(), "alpha1")?;
            check_weights(alpha2, lambdas.len(), "alpha2")?;
            let mut acc = LogExpr::zero();
            for (a, g) in alpha1.iter().zip(gammas) {
                acc = acc.add(&LogExpr::log_of(g.len() as u64, m1).scale(a));
            }
            for (a, l) in alpha2.iter().zip(lambdas) {
                acc = acc.add(&LogExpr::log_of(l.len() as u64, m2).scale(a));
            }
            acc
        }
    };
    Ok(DimExpr::Log(term.add_rational(&-Q::one())).clamp_zero())
}

/// Number of approximate squares of side about `m^-k` meeting the carpet:
/// `|Γ|^k · R^(L−k)` with `L` the matching row depth.
pub fn approx_square_count(c: &Carpet, k: u32) -> BigUint {
    let l = c.matching_row_depth(k);
    BigUint::from(c.digits.len()).pow(k) * BigUint::from(c.rows().len()).pow(l - k)
}

/// A plane map `z ↦ Az + b` whose linear part is diagonal `(a,0;0,d)` or
/// antidiagonal `(0,a;d,0)`, with exact rational entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePlaneMap {
    pub orientation: Orientation,
    pub a: Q,
    pub d: Q,
    pub tx: Q,
    pub ty: Q,
}

impl AffinePlaneMap {
    pub fn new(orientation: Orientation, a: Q, d: Q, tx: Q, ty: Q) -> Result<Self> {
        if a.is_zero() || d.is_zero() {
            return Err(CoreError::NonInvertible);
        }
        Ok(AffinePlaneMap { orientation, a, d, tx, ty })
    }

    pub fn identity() -> Self {
        AffinePlaneMap {
            orientation: Orientation::Diagonal,
            a: Q::one(),
            d: Q::one(),
            tx: Q::zero(),
            ty: Q::zero(),
        }
    }

    /// `(x, y) ↦ (y, x)`.
    pub fn swap() -> Self {
        AffinePlaneMap { orientation: Orientation::Antidiagonal, ..Self::identity() }
    }

    pub fn translation(tx: Q, ty: Q) -> Self {
        AffinePlaneMap { tx, ty, ..Self::identity() }
    }

    pub fn apply(&self, x: &Q, y: &Q) -> (Q, Q) {
        match self.orientation {
            Orientation::Diagonal => (&self.a * x + &self.tx, &self.d * y + &self.ty),
            Orientation::Antidiagonal => (&self.a * y + &self.tx, &self.d * x + &self.ty),
        }
    }

    /// Image of an axis-parallel rectangle, which is again one.
    pub fn apply_rect(&self, r: &Rect) -> Rect {
        let (ax, ay) = self.apply(&r.x0, &r.y0);
        let (bx, by) = self.apply(&r.x1, &r.y1);
        Rect {
            x0: ax.clone().min(bx.clone()),
            x1: ax.max(bx),
            y0: ay.clone().min(by.clone()),
            y1: ay.max(by),
        }
    }

    pub fn inverse(&self) -> Self {
        let (ia, id) = (self.a.recip(), self.d.recip());
        match self.orientation {
            Orientation::Diagonal => AffinePlaneMap {
                orientation: Orientation::Diagonal,
                tx: -&self.tx * &ia,
                ty: -&self.ty * &id,
                a: ia,
                d: id,
            },
            // x' = a y + tx, y' = d x + ty  ⇒  x = (y' − ty)/d, y = (x' − tx)/a
            Orientation::Antidiagonal => AffinePlaneMap {
                orientation: Orientation::Antidiagonal,
                tx: -&self.ty * &id,
                ty: -&self.tx * &ia,
                a: id,
                d: ia,
            },
        }
    }
}

/// A point of the carpet given by finite digit expansions of its
/// coordinates (base `m` for x, base `n` for y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitPoint {
    pub x_digits: Vec<u32>,
    pub y_digits: Vec<u32>,
}

impl DigitPoint {
    pub fn coords(&self, m: u64, n: u64) -> Result<(Q, Q)> {
        let x = crate::symbolic::pi_base_cylinder(m, &self.x_digits)?.lower();
        let y = crate::symbolic::pi_base_cylinder(n, &self.y_digits)?.lower();
        Ok((x, y))
    }
}

fn clip(r: &Rect, lo: &Q, hi: &Q) -> Option<Rect> {
    let x0 = r.x0.clone().max(lo.clone());
    let x1 = r.x1.clone().min(hi.clone());
    let y0 = r.y0.clone().max(lo.clone());
    let y1 = r.y1.clone().min(hi.clone());
    (x0 <= x1 && y0 <= y1).then_some(Rect { x0, x1, y0, y1 })
}

/// Cover of the `m`-adic miniset `[m^k (F − x)] ∩ [−1, 1]²` by the images of
/// the approximate squares of `F` at column depth `k + window_depth` (rows
/// at the matching depth), each clipped to `[−1, 1]²`. Rectangles are
/// `m^-window_depth` wide.
pub fn miniset_cover(c: &Carpet, x: &DigitPoint, k: u32, window_depth: u32) -> Result<Vec<Rect>> {
    let d = k + window_depth;
    let need = d as usize;
    let have = x.x_digits.len().min(x.y_digits.len());
    if have < need {
        return Err(CoreError::InsufficientDepth { need, have });
    }
    let (px, py) = x.coords(c.m, c.n)?;
    let scale = Q::from_integer(BigInt::from(pow_u(c.m, k)));
    let r = scale.recip();
    let yd = c.matching_row_depth(d);
    let steps = c.cover_schedule(d, yd);
    let (m, n) = (c.m, c.n);
    // Keep nodes whose rectangle meets the window [p − m^-k, p + m^-k]².
    let (wx0, wx1, wy0, wy1) = (&px - &r, &px + &r, &py - &r, &py + &r);
    let cells = enumerate_cover(m, n, &steps, &mut |g: &GridRect| {
        let rect = g.rect(m, n);
        rect.x1 >= wx0 && rect.x0 <= wx1 && rect.y1 >= wy0 && rect.y0 <= wy1
    })?;
    let one = Q::one();
    let mut out = Vec::with_capacity(cells.len());
    for g in cells {
        let rect = g.rect(m, n);
        let img = Rect {
            x0: (&rect.x0 - &px) * &scale,
            x1: (&rect.x1 - &px) * &scale,
            y0: (&rect.y0 - &py) * &scale,
            y1: (&rect.y1 - &py) * &scale,
        };
        if let Some(c) = clip(&img, &-one.clone(), &one) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Exponent `s` of `n^s` in the form `a + b·log_n m`, so that `n^s` is
/// exactly `n^a m^b` whenever `a` is an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StretchExponent {
    pub a: Q,
    pub b: i64,
}

impl StretchExponent {
    /// Enclosure of `n^s`.
    pub fn power(&self, m: u64, n: u64, bits: u32) -> Interval {
        let mb = if self.b >= 0 {
            Q::from_integer(BigInt::from(pow_u(m, self.b as u32)))
        } else {
            Q::from_integer(BigInt::from(pow_u(m, (-self.b) as u32))).recip()
        };
        pow_rational_enclosure(&Q::from_integer(BigInt::from(n)), &self.a, bits).scale(&mb)
    }
}

/// Cover of an `(ω, s)`-set: products of x-intervals from the fibers
/// along `ω` and y-intervals from the row projection, stretched
/// vertically by `n^s`, translated by `z` and clipped to `[−2, 2]²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductCover {
    pub xs: Vec<(Q, Q)>,
    pub ys: Vec<(Q, Q)>,
}

impl ProductCover {
    pub fn rects(&self) -> Vec<Rect> {
        let mut out = Vec::with_capacity(self.xs.len() * self.ys.len());
        for (x0, x1) in &self.xs {
            for (y0, y1) in &self.ys {
                out.push(Rect { x0: x0.clone(), x1: x1.clone(), y0: y0.clone(), y1: y1.clone() });
            }
        }
        out
    }

    /// Whether `r` fits inside one product cell inflated by `(sx, sy)`.
    /// Both interval lists are sorted with nondecreasing right ends, so
    /// the best candidate is the last interval starting at or before
    /// `a + s`; its two predecessors are checked as well to absorb clipping.
    pub fn contains_inflated(&self, r: &Rect, sx: &Q, sy: &Q) -> bool {
        fn fits(ivs: &[(Q, Q)], a: &Q, b: &Q, s: &Q) -> bool {
            let reach = a + s;
            let end = ivs.partition_point(|(lo, _)| lo <= &reach);
            ivs[end.saturating_sub(3)..end].iter().any(|(_, hi)| b <= &(hi + s))
        }
        fits(&self.xs, &r.x0, &r.x1, sx) && fits(&self.ys, &r.y0, &r.y1, sy)
    }
}

fn words_to_intervals(base: u64, alphabets: &[Vec<u32>]) -> Vec<(Q, Q)> {
    let mut idx: Vec<u128> = vec![0];
    for a in alphabets {
        idx = idx.iter().flat_map(|&i| a.iter().map(move |&d| i * base as u128 + d as u128)).collect();
    }
    let w = BigInt::from(pow_u(base, alphabets.len() as u32));
    idx.into_iter()
        .map(|i| (Q::new(BigInt::from(i), w.clone()), Q::new(BigInt::from(i + 1), w.clone())))
        .collect()
}

pub fn omega_s_set_cover(
    omega: &SymbolSequence,
    s: &StretchExponent,
    c: &Carpet,
    z: (&Q, &Q),
    depth: u32,
    y_depth: u32,
) -> Result<ProductCover> {
    if depth == 0 {
        return Err(CoreError::InvalidArgument("depth must be at least 1".into()));
    }
    let fib = fibers(c);
    let mut alph = Vec::with_capacity(depth as usize);
    for j in omega.prefix(depth as usize) {
        let f = fib.get(j as usize).cloned().unwrap_or_default();
        if f.is_empty() {
            return Err(CoreError::EmptyFiber(j));
        }
        alph.push(f);
    }
    let rows = c.rows();
    let stretch = s.power(c.m, c.n, 96);
    let two = Q::from_integer(BigInt::from(2));
    let mut xs: Vec<(Q, Q)> = words_to_intervals(c.m, &alph)
        .into_iter()
        .map(|(a, b)| (a + z.0, b + z.0))
        .filter_map(|(a, b)| {
            let (a, b) = (a.max(-two.clone()), b.min(two.clone()));
            (a <= b).then_some((a, b))
        })
        .collect();
    let mut ys: Vec<(Q, Q)> = words_to_intervals(c.n, &vec![rows; y_depth as usize])
        .into_iter()
        .filter_map(|(a, b)| {
            // Outward rounding: the lower end uses the smaller stretch when
            // nonnegative, the larger one when negative, and vice versa.
            let lo_pt = &a + z.1;
            let hi_pt = &b + z.1;
            let lo = if lo_pt >= Q::zero() { &lo_pt * &stretch.lo } else { &lo_pt * &stretch.hi };
            let hi = if hi_pt >= Q::zero() { &hi_pt * &stretch.hi } else { &hi_pt * &stretch.lo };
            let (lo, hi) = (lo.max(-two.clone()), hi.min(two.clone()));
            (lo <= hi).then_some((lo, hi))
        })
        .collect();
    xs.sort();
    ys.sort();
    Ok(ProductCover { xs, ys })
}
