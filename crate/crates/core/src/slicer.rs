//! Box counting of line slices, cover intersections and inclusions.
//!
//! Cells of a partition are half-open `[a, b) × [c, d)` except that the last
//! row and column of the unit square are closed. Target covers are unions of
//! closed rectangles no larger than a cell, produced by a
//! [`CoverTarget`] schedule.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::carpets::{AffinePlaneMap, Carpet, Orientation};
use crate::error::{CoreError, Result};
use crate::numeric::{pow_rational_enclosure, pow_u, DimExpr, Interval, Q};
use crate::symbolic::{effective_pairs, CodedProduct, CoverStep, GridRect, Pair, Rect};

/// Default number of descent nodes before a count is abandoned.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Precision ceiling for slope enclosures.
pub const MAX_SLOPE_BITS: u32 = 1024;

/// Slope of a line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slope {
    Rational(Q),
    /// `m1^(a + b·log m2 / log m1) = m1^a · m2^b`.
    Power { m1: u64, m2: u64, a: Q, b: i64 },
}

/// The line `y = slope · x + intercept`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    slope: Slope,
    intercept: Q,
}

impl Line {
    pub fn new(slope: Slope, intercept: Q) -> Result<Self> {
        match &slope {
            Slope::Rational(s) if s.is_zero() => return Err(CoreError::PrincipalLine),
            Slope::Power { m1, m2, b, .. } => {
                if *m1 < 2 {
                    return Err(CoreError::InvalidBase(*m1));
                }
                if *b != 0 && *m2 < 2 {
                    return Err(CoreError::InvalidBase(*m2));
                }
            }
            _ => {}
        }
        Ok(Line { slope, intercept })
    }

    pub fn rational(slope: Q, intercept: Q) -> Result<Self> {
        Line::new(Slope::Rational(slope), intercept)
    }

    pub fn slope(&self) -> &Slope {
        &self.slope
    }

    pub fn intercept(&self) -> &Q {
        &self.intercept
    }

    /// Enclosure of the slope; a point whenever the slope is rational.
    pub fn slope_enclosure(&self, bits: u32) -> Interval {
        match &self.slope {
            Slope::Rational(s) => Interval::point(s.clone()),
            Slope::Power { m1, m2, a, b } => {
                let base = Q::from_integer(BigInt::from(*m1));
                let mut e = pow_rational_enclosure(&base, a, bits);
                if *b != 0 {
                    let p = Q::from_integer(BigInt::from(pow_u(*m2, b.unsigned_abs() as u32)));
                    e = e.scale(&if *b > 0 { p } else { p.recip() });
                }
                e
            }
        }
    }
}

/// Result of a predicate that may be undecided at the current precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Yes,
    No,
    Unknown,
}

/// A box with closed left and bottom edges and optionally closed right and
/// top edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellBox {
    pub x0: Q,
    pub x1: Q,
    pub x1_closed: bool,
    pub y0: Q,
    pub y1: Q,
    pub y1_closed: bool,
}

impl CellBox {
    pub fn closed(r: &Rect) -> Self {
        CellBox {
            x0: r.x0.clone(),
            x1: r.x1.clone(),
            x1_closed: true,
            y0: r.y0.clone(),
            y1: r.y1.clone(),
            y1_closed: true,
        }
    }

    fn closure(&self) -> Self {
        CellBox { x1_closed: true, y1_closed: true, ..self.clone() }
    }
}

struct End {
    v: Q,
    closed: bool,
}

fn nonempty(lo: End, hi: End) -> bool {
    match lo.v.cmp(&hi.v) {
        Ordering::Less => true,
        Ordering::Equal => lo.closed && hi.closed,
        Ordering::Greater => false,
    }
}

fn max_end(a: End, b: End) -> End {
    match a.v.cmp(&b.v) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => End { v: a.v, closed: a.closed && b.closed },
    }
}

fn min_end(a: End, b: End) -> End {
    match a.v.cmp(&b.v) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => End { v: a.v, closed: a.closed && b.closed },
    }
}

/// Exact test for `y = s x + c` meeting the box.
pub fn line_meets_box(s: &Q, c: &Q, b: &CellBox) -> bool {
    let t0 = (&b.y0 - c) / s;
    let t1 = (&b.y1 - c) / s;
    let (lo, hi) = if s.is_positive() {
        (End { v: t0, closed: true }, End { v: t1, closed: b.y1_closed })
    } else {
        (End { v: t1, closed: b.y1_closed }, End { v: t0, closed: true })
    };
    let lo = max_end(lo, End { v: b.x0.clone(), closed: true });
    let hi = min_end(hi, End { v: b.x1.clone(), closed: b.x1_closed });
    nonempty(lo, hi)
}

/// Three-valued test for a line with slope in `s` (one sign, nonzero).
/// Lines through the common point `(0, c)` meeting a convex set have slopes
/// forming an interval whose finite ends are slopes to corners, which
/// gives both certificates.
pub fn line_meets_box_enclosed(s: &Interval, c: &Q, b: &CellBox) -> Decision {
    if s.is_point() {
        return if line_meets_box(&s.lo, c, b) { Decision::Yes } else { Decision::No };
    }
    if line_meets_box(&s.lo, c, b) && line_meets_box(&s.hi, c, b) {
        return Decision::Yes;
    }
    let cl = b.closure();
    if line_meets_box(&s.lo, c, &cl) || line_meets_box(&s.hi, c, &cl) {
        return Decision::Unknown;
    }
    for x in [&cl.x0, &cl.x1] {
        if x.is_positive() {
            for y in [&cl.y0, &cl.y1] {
                let k = (y - c) / x;
                if s.lo <= k && k <= s.hi {
                    return Decision::Unknown;
                }
            }
        }
    }
    Decision::No
}

/// Partition of the unit square into a grid of half-open cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Partition {
    /// `2^-k × 2^-k`.
    Dyadic(u32),
    /// `base^-k × base^-k`.
    BaseGrid { base: u64, k: u32 },
    /// `m1^-r × m2^-k` with `r = r_k(t)`.
    Adaptive { m1: u64, m2: u64, r: u32, k: u32 },
}

fn pow_u128(b: u64, e: u32) -> Result<u128> {
    (b as u128).checked_pow(e).ok_or_else(|| CoreError::Overflow(format!("{}^{} exceeds u128", b, e)))
}

impl Partition {
    pub fn depth(&self) -> u32 {
        match self {
            Partition::Dyadic(k) | Partition::BaseGrid { k, .. } | Partition::Adaptive { k, .. } => *k,
        }
    }

    /// Number of columns and rows.
    pub fn grid(&self) -> Result<(u128, u128)> {
        Ok(match *self {
            Partition::Dyadic(k) => (pow_u128(2, k)?, pow_u128(2, k)?),
            Partition::BaseGrid { base, k } => (pow_u128(base, k)?, pow_u128(base, k)?),
            Partition::Adaptive { m1, m2, r, k } => (pow_u128(m1, r)?, pow_u128(m2, k)?),
        })
    }

    pub fn descriptor(&self) -> String {
        match self {
            Partition::Dyadic(_) => "dyadic".into(),
            Partition::BaseGrid { base, .. } => format!("base{}", base),
            Partition::Adaptive { m1, m2, r, .. } => format!("adaptive{}x{}r{}", m1, m2, r),
        }
    }

    /// Base whose `k`-th power is the inverse row height.
    pub fn scale_base(&self) -> u64 {
        match *self {
            Partition::Dyadic(_) => 2,
            Partition::BaseGrid { base, .. } => base,
            Partition::Adaptive { m2, .. } => m2,
        }
    }
}

/// A family of partitions indexed by depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionKind {
    Dyadic,
    BaseGrid(u64),
    /// Adaptive cells driven by a coding prefix `τ`.
    Adaptive { m1: u64, m2: u64, tau: Vec<u8> },
}

impl PartitionKind {
    pub fn at(&self, k: u32) -> Result<Partition> {
        Ok(match self {
            PartitionKind::Dyadic => Partition::Dyadic(k),
            PartitionKind::BaseGrid(b) => Partition::BaseGrid { base: *b, k },
            PartitionKind::Adaptive { m1, m2, tau } => {
                if k as usize > tau.len() {
                    return Err(CoreError::InsufficientDepth { need: k as usize, have: tau.len() });
                }
                let r = tau[..k as usize].iter().map(|&b| b as u32).sum();
                Partition::Adaptive { m1: *m1, m2: *m2, r, k }
            }
        })
    }
}

/// A set given by a hierarchical cover of closed grid rectangles.
pub trait CoverTarget: Sync {
    /// Bases of the x and y digit expansions.
    fn bases(&self) -> (u64, u64);
    /// Cover schedule whose leaves are at most `1/px` wide and `1/py` tall.
    fn schedule_for(&self, px: u128, py: u128) -> Result<Vec<CoverStep>>;
}

fn depth_reaching(base: u64, target: u128) -> u32 {
    let mut d = 0;
    let mut p: u128 = 1;
    while p < target {
        p = p.saturating_mul(base as u128);
        d += 1;
    }
    d
}

impl CoverTarget for Carpet {
    fn bases(&self) -> (u64, u64) {
        (self.m(), self.n())
    }

    fn schedule_for(&self, px: u128, py: u128) -> Result<Vec<CoverStep>> {
        Ok(self.cover_schedule(depth_reaching(self.m(), px), depth_reaching(self.n(), py)))
    }
}

impl CoverTarget for CodedProduct {
    fn bases(&self) -> (u64, u64) {
        (self.m1, self.m2)
    }

    fn schedule_for(&self, px: u128, py: u128) -> Result<Vec<CoverStep>> {
        let mut d = 0usize;
        let (mut wx, mut wy): (u128, u128) = (1, 1);
        while wx < px || wy < py {
            if d >= self.tau.len() {
                return Err(CoreError::InsufficientDepth { need: d + 1, have: self.tau.len() });
            }
            if self.tau[d] == 1 {
                wx = wx.saturating_mul(self.m1 as u128);
            }
            wy = wy.saturating_mul(self.m2 as u128);
            d += 1;
        }
        coded_schedule(self, d)
    }
}

/// Cover schedule whose leaves are the π-images of the depth-`d` cylinders.
pub fn coded_schedule(cp: &CodedProduct, d: usize) -> Result<Vec<CoverStep>> {
    Ok(cp
        .steps(d)?
        .into_iter()
        .map(|s| CoverStep {
            refine_x: s.tau == 1,
            refine_y: true,
            pairs: s.xs.iter().flat_map(|&x| s.ys.iter().map(move |&y| (x, y))).collect(),
        })
        .collect())
}

/// Count of partition cells met by the line inside the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverCount {
    pub k: u32,
    pub partition: Partition,
    pub count_lower: u64,
    pub count_upper: u64,
}

impl CoverCount {
    pub fn is_exact(&self) -> bool {
        self.count_lower == self.count_upper
    }
}

/// Cells found by a (partial) descent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellTally {
    pub lower: BTreeSet<(u128, u128)>,
    pub upper: BTreeSet<(u128, u128)>,
    pub exhausted: bool,
}

impl CellTally {
    pub fn merge(mut self, mut o: CellTally) -> CellTally {
        if self.lower.len() < o.lower.len() {
            core::mem::swap(&mut self.lower, &mut o.lower);
        }
        if self.upper.len() < o.upper.len() {
            core::mem::swap(&mut self.upper, &mut o.upper);
        }
        self.lower.append(&mut o.lower);
        self.upper.append(&mut o.upper);
        self.exhausted |= o.exhausted;
        self
    }
}

/// Descent node: number of schedule steps applied and the rectangle.
pub type Node = (usize, GridRect);

/// Recursive descent over a target cover, collecting the cells that the
/// line meets. Split the work with [`LineCellCounter::roots`], run
/// [`LineCellCounter::descend`] on disjoint root sets (possibly in
/// parallel) and combine with [`CellTally::merge`].
pub struct LineCellCounter<'a> {
    line: &'a Line,
    partition: Partition,
    mx: u64,
    my: u64,
    steps: Vec<CoverStep>,
    pairs: Vec<Vec<Pair>>,
    px: u128,
    py: u128,
    slope: Interval,
    /// Tighter enclosures tried in turn when `slope` cannot decide a leaf.
    refinements: Vec<Interval>,
    budget: u64,
    visits: AtomicU64,
    over_budget: AtomicBool,
}

impl<'a> LineCellCounter<'a> {
    pub fn new(target: &dyn CoverTarget, line: &'a Line, partition: Partition, budget: u64) -> Result<Self> {
        let grid = partition.grid()?;
        Self::with_cover_grid(target, line, partition, grid, budget)
    }

    /// Like [`LineCellCounter::new`] but with the target cover fixed at the
    /// resolution of a `cover.0 × cover.1` grid, which must be at least as
    /// fine as the partition.
    pub fn with_cover_grid(
        target: &dyn CoverTarget,
        line: &'a Line,
        partition: Partition,
        cover: (u128, u128),
        budget: u64,
    ) -> Result<Self> {
        if partition.depth() == 0 {
            return Err(CoreError::InvalidArgument("depth must be at least 1".into()));
        }
        let (px, py) = partition.grid()?;
        if cover.0 < px || cover.1 < py {
            return Err(CoreError::InvalidArgument("cover grid coarser than the partition".into()));
        }
        let (mx, my) = target.bases();
        let steps = target.schedule_for(cover.0, cover.1)?;
        let pairs = steps.iter().map(effective_pairs).collect();
        Ok(LineCellCounter {
            line,
            partition,
            mx,
            my,
            steps,
            pairs,
            px,
            py,
            slope: line.slope_enclosure(64),
            refinements: refinement_ladder(line),
            budget,
            visits: AtomicU64::new(0),
            over_budget: AtomicBool::new(false),
        })
    }

    pub fn visits(&self) -> u64 {
        self.visits.load(AtomicOrdering::Relaxed)
    }

    fn charge(&self) -> bool {
        let v = self.visits.fetch_add(1, AtomicOrdering::Relaxed);
        if v >= self.budget {
            self.over_budget.store(true, AtomicOrdering::Relaxed);
            return false;
        }
        true
    }

    fn may_meet(&self, g: &GridRect) -> bool {
        let b = CellBox::closed(&g.rect(self.mx, self.my));
        line_meets_box_enclosed(&self.slope, &self.line.intercept, &b) != Decision::No
    }

    fn children(&self, (d, g): Node, out: &mut Vec<Node>) -> Result<()> {
        for &p in self.pairs[d].iter().rev() {
            let c = g.child(&self.steps[d], p, self.mx, self.my)?;
            if self.may_meet(&c) {
                out.push((d + 1, c));
            }
        }
        Ok(())
    }

    /// Breadth-first frontier of at least `want` nodes (or every leaf).
    pub fn roots(&self, want: usize) -> Result<Vec<Node>> {
        let mut frontier: Vec<Node> = Vec::new();
        if self.may_meet(&GridRect::UNIT) {
            frontier.push((0, GridRect::UNIT));
        }
        loop {
            if frontier.len() >= want || frontier.iter().all(|n| n.0 == self.steps.len()) {
                return Ok(frontier);
            }
            let mut next = Vec::with_capacity(frontier.len() * 4);
            for n in frontier {
                if n.0 == self.steps.len() {
                    next.push(n);
                } else {
                    self.children(n, &mut next)?;
                }
            }
            frontier = next;
        }
    }

    pub fn descend(&self, roots: &[Node]) -> Result<CellTally> {
        let mut tally = CellTally::default();
        let mut stack: Vec<Node> = roots.iter().rev().copied().collect();
        while let Some(node) = stack.pop() {
            if !self.charge() {
                tally.exhausted = true;
                return Ok(tally);
            }
            if node.0 == self.steps.len() {
                self.leaf(&node.1, &mut tally);
            } else {
                self.children(node, &mut stack)?;
            }
        }
        Ok(tally)
    }

    fn axis_cells(lo: &Q, hi: &Q, cells: u128) -> Option<(u128, u128)> {
        let n = Q::from_integer(BigInt::from(cells));
        let a = (lo * &n).floor().to_integer();
        let b = (hi * &n).floor().to_integer();
        if b.is_negative() || a >= BigInt::from(cells) {
            return None;
        }
        let a = a.to_u128().unwrap_or(0);
        let b = b.to_u128().map_or(cells - 1, |v| v.min(cells - 1));
        Some((a, b))
    }

    fn cell_side(lo: &Q, hi: &Q, i: u128, cells: u128) -> Option<(Q, Q, bool)> {
        let n = BigInt::from(cells);
        let c0 = Q::new(BigInt::from(i), n.clone());
        let c1 = Q::new(BigInt::from(i + 1), n);
        let last = i + 1 == cells;
        let a = lo.clone().max(c0);
        let (b, closed) = match hi.cmp(&c1) {
            Ordering::Less => (hi.clone(), true),
            _ => (c1, last),
        };
        nonempty(End { v: a.clone(), closed: true }, End { v: b.clone(), closed }).then_some((a, b, closed))
    }

    fn leaf(&self, g: &GridRect, tally: &mut CellTally) {
        let r = g.rect(self.mx, self.my);
        let (Some((i0, i1)), Some((j0, j1))) =
            (Self::axis_cells(&r.x0, &r.x1, self.px), Self::axis_cells(&r.y0, &r.y1, self.py))
        else {
            return;
        };
        for i in i0..=i1 {
            let Some((x0, x1, x1_closed)) = Self::cell_side(&r.x0, &r.x1, i, self.px) else { continue };
            for j in j0..=j1 {
                if tally.lower.contains(&(i, j)) {
                    continue;
                }
                let Some((y0, y1, y1_closed)) = Self::cell_side(&r.y0, &r.y1, j, self.py) else { continue };
                let b = CellBox { x0: x0.clone(), x1: x1.clone(), x1_closed, y0, y1, y1_closed };
                match self.decide(&b) {
                    Decision::Yes => {
                        tally.lower.insert((i, j));
                        tally.upper.insert((i, j));
                    }
                    Decision::Unknown => {
                        tally.upper.insert((i, j));
                    }
                    Decision::No => {}
                }
            }
        }
    }

    fn decide(&self, b: &CellBox) -> Decision {
        let mut d = line_meets_box_enclosed(&self.slope, &self.line.intercept, b);
        for s in &self.refinements {
            if d != Decision::Unknown {
                break;
            }
            d = line_meets_box_enclosed(s, &self.line.intercept, b);
        }
        d
    }

    /// Turn a merged tally into a count, or a budget error carrying the
    /// certified partial lower count.
    pub fn finish(&self, tally: CellTally) -> Result<CoverCount> {
        if tally.exhausted || self.over_budget.load(AtomicOrdering::Relaxed) {
            return Err(CoreError::BudgetExhausted { budget: self.budget, partial_lower: tally.lower.len() as u64 });
        }
        Ok(CoverCount {
            k: self.partition.depth(),
            partition: self.partition.clone(),
            count_lower: tally.lower.len() as u64,
            count_upper: tally.upper.len() as u64,
        })
    }
}

fn refinement_ladder(line: &Line) -> Vec<Interval> {
    if matches!(line.slope, Slope::Rational(_)) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut bits = 128;
    while bits <= MAX_SLOPE_BITS {
        out.push(line.slope_enclosure(bits).round_outward(bits));
        bits *= 2;
    }
    out
}

/// Sequential convenience wrapper around [`LineCellCounter`].
pub fn count_line_cells(
    target: &dyn CoverTarget,
    line: &Line,
    partition: Partition,
    budget: u64,
) -> Result<CoverCount> {
    let c = LineCellCounter::new(target, line, partition, budget)?;
    let roots = c.roots(1)?;
    let t = c.descend(&roots)?;
    c.finish(t)
}

/// Least-squares fit of `log N` against `k · log base`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub slope_lower: f64,
    pub slope_upper: f64,
    pub k_min: u32,
    pub k_max: u32,
    /// Root-mean-square residual of the fit to the upper counts.
    pub residual: f64,
    pub slack: Option<f64>,
}

impl SlopeEstimate {
    pub fn slope(&self) -> f64 {
        self.slope_upper
    }
}

/// Least-squares slope, intercept and RMS residual.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| {
        let e = y - icpt - slope * x;
        e * e
    }).sum();
    (slope, icpt, libm::sqrt(rss / n))
}

pub fn boxdim_estimate(counts: &[CoverCount], base: u64) -> Result<SlopeEstimate> {
    let mut ks: Vec<u32> = counts.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 {
        return Err(CoreError::InvalidArgument(format!("need at least 3 depths, got {}", ks.len())));
    }
    if counts.iter().all(|c| c.count_upper == 0) {
        return Err(CoreError::UndefinedEstimate("all counts are zero".into()));
    }
    if counts.iter().any(|c| c.count_lower == 0) {
        return Err(CoreError::UndefinedEstimate("a count is zero; log undefined".into()));
    }
    let lb = libm::log(base as f64);
    let xs: Vec<f64> = counts.iter().map(|c| c.k as f64 * lb).collect();
    let lo: Vec<f64> = counts.iter().map(|c| libm::log(c.count_lower as f64)).collect();
    let hi: Vec<f64> = counts.iter().map(|c| libm::log(c.count_upper as f64)).collect();
    let (s_lo, _, _) = fit_line(&xs, &lo);
    let (s_hi, _, res) = fit_line(&xs, &hi);
    Ok(SlopeEstimate {
        slope_lower: s_lo.min(s_hi),
        slope_upper: s_lo.max(s_hi),
        k_min: ks[0],
        k_max: *ks.last().unwrap(),
        residual: res,
        slack: None,
    })
}

/// One-sided comparison of a fitted slope with a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub slope: SlopeEstimate,
    pub bound: String,
    /// Upper end of the bound's certified enclosure.
    pub bound_value: f64,
    pub slack: f64,
    pub counts: Vec<CoverCount>,
}

/// PASS iff the upper fitted slope is at most `bound + slack`.
pub fn verdict_from_counts(counts: Vec<CoverCount>, base: u64, bound: &DimExpr, slack: f64) -> Result<Verdict> {
    if !(slack > 0.0) {
        return Err(CoreError::InvalidArgument("slack must be positive".into()));
    }
    let mut slope = boxdim_estimate(&counts, base)?;
    slope.slack = Some(slack);
    let bound_value = crate::numeric::to_f64(&bound.enclosure(64).hi);
    Ok(Verdict {
        pass: slope.slope_upper <= bound_value + slack,
        slope,
        bound: format!("{}", bound),
        bound_value,
        slack,
        counts,
    })
}

pub fn verify_slice_bound(
    target: &dyn CoverTarget,
    line: &Line,
    kind: &PartitionKind,
    window: core::ops::RangeInclusive<u32>,
    bound: &DimExpr,
    slack: f64,
    budget: u64,
) -> Result<Verdict> {
    let mut counts = Vec::new();
    let mut base = 2;
    for k in window {
        let p = kind.at(k)?;
        base = p.scale_base();
        counts.push(count_line_cells(target, line, p, budget)?);
    }
    verdict_from_counts(counts, base, bound, slack)
}

/// Half-open plane cells `[i, i+1)/2^k × [j, j+1)/2^k` met by a closed
/// rectangle.
pub fn dyadic_cells_of(r: &Rect, k: u32) -> Vec<(i128, i128)> {
    let s = Q::from_integer(BigInt::one() << k);
    let idx = |v: &Q| (v * &s).floor().to_integer().to_i128().expect("cell index fits i128");
    let (i0, i1, j0, j1) = (idx(&r.x0), idx(&r.x1), idx(&r.y0), idx(&r.y1));
    let mut out = Vec::with_capacity(((i1 - i0 + 1) * (j1 - j0 + 1)) as usize);
    for i in i0..=i1 {
        for j in j0..=j1 {
            out.push((i, j));
        }
    }
    out
}

/// Cells of the plane dyadic grid at depth `k` met by a union of rectangles.
pub fn dyadic_cell_set(rects: &[Rect], k: u32) -> BTreeSet<(i128, i128)> {
    rects.iter().flat_map(|r| dyadic_cells_of(r, k)).collect()
}

/// Cover rectangles of `g(c)` no larger than `w` in either direction.
pub fn mapped_cover(c: &Carpet, g: &AffinePlaneMap, w: &Q) -> Result<Vec<Rect>> {
    let (wx, wy) = match g.orientation {
        Orientation::Diagonal => (w / g.a.abs(), w / g.d.abs()),
        Orientation::Antidiagonal => (w / g.d.abs(), w / g.a.abs()),
    };
    let (xd, yd) = c.depths_for(&wx, &wy);
    let cells = crate::symbolic::enumerate_cover(c.m(), c.n(), &c.cover_schedule(xd, yd), &mut |_| true)?;
    Ok(cells.iter().map(|r| g.apply_rect(&r.rect(c.m(), c.n()))).collect())
}

/// Both sides of a cover intersection count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionCount {
    pub count: CoverCount,
    /// Cells met by the cover of `g(F)` alone.
    pub image_cells: u64,
    /// Cells met by the cover of `E` alone.
    pub target_cells: u64,
}

/// Number of `2^-k` cells meeting both the cover of `g(F)` and that of `E`.
pub fn intersect_cover_count(f: &Carpet, g: &AffinePlaneMap, e: &Carpet, k: u32) -> Result<IntersectionCount> {
    if k == 0 {
        return Err(CoreError::InvalidArgument("depth must be at least 1".into()));
    }
    if g.a.is_zero() || g.d.is_zero() {
        return Err(CoreError::NonInvertible);
    }
    let w = Q::new(BigInt::one(), BigInt::one() << k);
    let a = dyadic_cell_set(&mapped_cover(f, g, &w)?, k);
    let b = dyadic_cell_set(&mapped_cover(e, &AffinePlaneMap::identity(), &w)?, k);
    let n = a.intersection(&b).count() as u64;
    Ok(IntersectionCount {
        count: CoverCount { k, partition: Partition::Dyadic(k), count_lower: n, count_upper: n },
        image_cells: a.len() as u64,
        target_cells: b.len() as u64,
    })
}

/// Outcome of a cover-inclusion test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inclusion {
    pub included: bool,
    /// First rectangle of the image cover that is not contained.
    pub witness: Option<Rect>,
    pub rectangles_checked: u64,
    /// Depths `(x, y)` of the grid on which `E` was tested.
    pub target_grid: (u32, u32),
}

fn floor_div(num: &BigInt, den: &BigInt) -> BigInt {
    num.div_floor(den)
}

fn ceil_div(num: &BigInt, den: &BigInt) -> BigInt {
    -(-num).div_floor(den)
}

/// Whether every approximate square of `F` at column depth `k`, mapped by
/// `g`, lies in the cover of `E` inflated by `slack_cells` cells. `E` is
/// tested on its own grid, at least as fine as the mapped squares.
pub fn cover_inclusion(g: &AffinePlaneMap, f: &Carpet, e: &Carpet, k: u32, slack_cells: u32) -> Result<Inclusion> {
    if k == 0 {
        return Err(CoreError::InvalidArgument("depth must be at least 1".into()));
    }
    let l = f.matching_row_depth(k);
    let cover = crate::symbolic::enumerate_cover(f.m(), f.n(), &f.cover_schedule(k, l), &mut |_| true)?;
    let w = Q::new(BigInt::one(), BigInt::from(pow_u(f.m(), k)));
    let h = Q::new(BigInt::one(), BigInt::from(pow_u(f.n(), l)));
    let (iw, ih) = match g.orientation {
        Orientation::Diagonal => (&w * g.a.abs(), &h * g.d.abs()),
        Orientation::Antidiagonal => (&h * g.a.abs(), &w * g.d.abs()),
    };
    let (xd, yd) = e.depths_for(&iw, &ih);
    let gx = BigInt::from(pow_u(e.m(), xd));
    let gy = BigInt::from(pow_u(e.n(), yd));
    let s = slack_cells as i128;
    let (nx, ny) = (gx.to_i128().unwrap_or(i128::MAX), gy.to_i128().unwrap_or(i128::MAX));
    let in_cover = |ax: i128, ay: i128| -> bool {
        for dx in -s..=s {
            for dy in -s..=s {
                let (x, y) = (ax + dx, ay + dy);
                if x >= 0 && y >= 0 && x < nx && y < ny && e.cover_contains(x as u128, xd, y as u128, yd) {
                    return true;
                }
            }
        }
        false
    };
    let mut checked = 0u64;
    for cell in &cover {
        let r = g.apply_rect(&cell.rect(f.m(), f.n()));
        checked += 1;
        // Grid cells meeting the interior of r (or r itself when degenerate).
        let span = |lo: &Q, hi: &Q, n: &BigInt| -> (i128, i128) {
            let a = floor_div(&(lo.numer() * n), lo.denom());
            let b = if lo == hi { a.clone() } else { ceil_div(&(hi.numer() * n), hi.denom()) - 1 };
            (a.to_i128().unwrap(), b.to_i128().unwrap())
        };
        let (i0, i1) = span(&r.x0, &r.x1, &gx);
        let (j0, j1) = span(&r.y0, &r.y1, &gy);
        let ok = (i0..=i1).all(|i| (j0..=j1).all(|j| in_cover(i, j)));
        if !ok {
            return Ok(Inclusion { included: false, witness: Some(r), rectangles_checked: checked, target_grid: (xd, yd) });
        }
    }
    Ok(Inclusion { included: true, witness: None, rectangles_checked: checked, target_grid: (xd, yd) })
}

/// Largest number of `m2^-k` grid cells met by the π-image of a depth-`k`
/// cylinder of a coded product, over all its cylinders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellBoundScan {
    pub k: usize,
    pub cylinders: u64,
    pub max_cells: u64,
}

pub fn cell_bound_scan(cp: &CodedProduct, k: usize) -> Result<CellBoundScan> {
    let steps = coded_schedule(cp, k)?;
    let cyl = cp.cylinder_count(k)?;
    let rects = crate::symbolic::enumerate_cover(cp.m1, cp.m2, &steps, &mut |_| true)?;
    let grid = pow_u128(cp.m2, k as u32)?;
    let r = cp.r_of(k);
    let wx = pow_u128(cp.m1, r)?;
    let wy = pow_u128(cp.m2, k as u32)?;
    // Integer cell ranges: [a/w, (a+1)/w] against half-open cells of 1/grid
    // with the last one closed.
    let span = |a: u128, w: u128| -> u64 {
        let lo = (BigUint::from(a) * grid) / w;
        let hi_num = BigUint::from(a + 1) * grid;
        let hi = (&hi_num / w).min(BigUint::from(grid - 1));
        (hi - lo + BigUint::one()).to_u64().unwrap()
    };
    let mut max_cells = 0;
    let mut distinct: BTreeSet<(u128, u128)> = BTreeSet::new();
    for g in &rects {
        if distinct.insert((g.ax, g.ay)) {
            max_cells = max_cells.max(span(g.ax, wx) * span(g.ay, wy));
        }
    }
    Ok(CellBoundScan { k, cylinders: cyl.to_u64().unwrap_or(u64::MAX), max_cells })
}

/// Reference count without pruning: every target leaf is bucketed into
/// the cells its closed rectangle touches, and each cell is tested against
/// its bucket. Only for small depths.
pub fn brute_force_line_cells(target: &dyn CoverTarget, line: &Line, partition: &Partition) -> Result<u64> {
    let (px, py) = partition.grid()?;
    let (mx, my) = target.bases();
    let steps = target.schedule_for(px, py)?;
    let leaves = crate::symbolic::enumerate_cover(mx, my, &steps, &mut |_| true)?;
    let mut buckets: alloc::collections::BTreeMap<(u128, u128), Vec<Rect>> = Default::default();
    for g in &leaves {
        let r = g.rect(mx, my);
        // Candidate ranges padded by one cell, then filtered exactly.
        let near = |v: &Q, n: u128| -> u128 {
            (v * Q::from_integer(BigInt::from(n))).floor().to_integer().to_u128().unwrap_or(0)
        };
        let (ia, ib) = (near(&r.x0, px).saturating_sub(1), (near(&r.x1, px) + 1).min(px - 1));
        let (ja, jb) = (near(&r.y0, py).saturating_sub(1), (near(&r.y1, py) + 1).min(py - 1));
        for i in ia..=ib {
            let (c0, c1) = (Q::new(BigInt::from(i), BigInt::from(px)), Q::new(BigInt::from(i + 1), BigInt::from(px)));
            if r.x1 < c0 || r.x0 > c1 {
                continue;
            }
            for j in ja..=jb {
                let (d0, d1) = (Q::new(BigInt::from(j), BigInt::from(py)), Q::new(BigInt::from(j + 1), BigInt::from(py)));
                if r.y1 < d0 || r.y0 > d1 {
                    continue;
                }
                buckets.entry((i, j)).or_default().push(r.clone());
            }
        }
    }
    let coarse = line.slope_enclosure(64);
    let fine = line.slope_enclosure(MAX_SLOPE_BITS).round_outward(MAX_SLOPE_BITS);
    let mut n = 0;
    for (&(i, j), rects) in &buckets {
        let c = CellBox {
            x0: Q::new(BigInt::from(i), BigInt::from(px)),
            x1: Q::new(BigInt::from(i + 1), BigInt::from(px)),
            x1_closed: i + 1 == px,
            y0: Q::new(BigInt::from(j), BigInt::from(py)),
            y1: Q::new(BigInt::from(j + 1), BigInt::from(py)),
            y1_closed: j + 1 == py,
        };
        let hit = rects.iter().any(|r| {
            let b = CellBox {
                x0: (&c.x0).max(&r.x0).clone(),
                x1: (&c.x1).min(&r.x1).clone(),
                x1_closed: if r.x1 < c.x1 { true } else { c.x1_closed },
                y0: (&c.y0).max(&r.y0).clone(),
                y1: (&c.y1).min(&r.y1).clone(),
                y1_closed: if r.y1 < c.y1 { true } else { c.y1_closed },
            };
            let xs = nonempty(End { v: b.x0.clone(), closed: true }, End { v: b.x1.clone(), closed: b.x1_closed });
            let ys = nonempty(End { v: b.y0.clone(), closed: true }, End { v: b.y1.clone(), closed: b.y1_closed });
            xs && ys
                && match line_meets_box_enclosed(&coarse, line.intercept(), &b) {
                    Decision::Unknown => line_meets_box_enclosed(&fine, line.intercept(), &b) != Decision::No,
                    d => d == Decision::Yes,
                }
        });
        if hit {
            n += 1;
        }
    }
    Ok(n)
}
