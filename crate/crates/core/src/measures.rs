//! Seeded sampling of self-affine measures, cell histograms and the
//! empirical estimators built on them.
//!
//! Samples are kept as integer numerators over `m^D` and `n^D` so that
//! every cell lookup is exact. Sampling is split into fixed-size chunks;
//! chunk `c` draws from the ChaCha8 stream `c` of the spec's seed, so the
//! output does not depend on how chunks are distributed over workers.
//!
//! Everything here is observational. Reports carry their sample sizes and
//! never claim more than the finite data shows.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::carpets::{bound_intersection, dims, fibers, AffinePlaneMap, Carpet, Orientation};
use crate::error::{CoreError, Result};
use crate::numeric::{to_f64, DimExpr, Interval, Q};
use crate::slicer::fit_line;
use crate::symbolic::{cumulative_thresholds, pick, Pair, SymbolSequence};

/// Points drawn per chunk.
pub const SAMPLE_CHUNK: u64 = 1 << 14;

/// A Bernoulli measure on the digit set of a carpet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernoulliSpec {
    support: Vec<Pair>,
    probabilities: Vec<Q>,
    seed: u64,
    cum: Vec<u128>,
}

impl BernoulliSpec {
    pub fn new(c: &Carpet, support: Vec<Pair>, probabilities: Vec<Q>, seed: u64) -> Result<Self> {
        if support.is_empty() || support.len() != probabilities.len() {
            return Err(CoreError::InvalidArgument(format!(
                "support has {} pairs but {} probabilities were given",
                support.len(),
                probabilities.len()
            )));
        }
        for (k, p) in support.iter().enumerate() {
            if !c.contains_digit(*p) {
                return Err(CoreError::InvalidArgument(format!("support pair {:?} is not a digit of the carpet", p)));
            }
            if support[..k].contains(p) {
                return Err(CoreError::InvalidArgument(format!("support pair {:?} repeated", p)));
            }
        }
        if let Some(p) = probabilities.iter().find(|p| **p <= Q::zero()) {
            return Err(CoreError::ProbabilityOutOfRange(format!("{} (weights must be positive)", p)));
        }
        let cum = cumulative_thresholds(&probabilities)?;
        Ok(BernoulliSpec { support, probabilities, seed, cum })
    }

    pub fn uniform(c: &Carpet, seed: u64) -> Result<Self> {
        let support: Vec<Pair> = c.digits().iter().copied().collect();
        let p = Q::new(BigInt::one(), BigInt::from(support.len()));
        let probabilities = vec![p; support.len()];
        BernoulliSpec::new(c, support, probabilities, seed)
    }

    pub fn point_mass(c: &Carpet, digit: Pair, seed: u64) -> Result<Self> {
        BernoulliSpec::new(c, vec![digit], vec![Q::one()], seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        BernoulliSpec { seed, ..self.clone() }
    }

    pub fn support(&self) -> &[Pair] {
        &self.support
    }

    pub fn probabilities(&self) -> &[Q] {
        &self.probabilities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Marginal law of the row digit.
    pub fn row_marginal(&self) -> BTreeMap<u32, Q> {
        let mut out: BTreeMap<u32, Q> = BTreeMap::new();
        for (p, w) in self.support.iter().zip(&self.probabilities) {
            *out.entry(p.1).or_insert_with(Q::zero) += w;
        }
        out
    }

    /// Marginal law of the column digit.
    pub fn column_marginal(&self) -> BTreeMap<u32, Q> {
        let mut out: BTreeMap<u32, Q> = BTreeMap::new();
        for (p, w) in self.support.iter().zip(&self.probabilities) {
            *out.entry(p.0).or_insert_with(Q::zero) += w;
        }
        out
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn checked_pow(base: u64, e: usize) -> Result<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc
            .checked_mul(base as u128)
            .ok_or_else(|| CoreError::Overflow(format!("{}^{} does not fit in 128 bits", base, e)))?;
    }
    Ok(acc)
}

/// `(chunk index, points in chunk)` for a run of `n` samples.
pub fn chunk_plan(n: u64) -> Vec<(u64, usize)> {
    let mut out = Vec::new();
    let mut left = n;
    let mut c = 0;
    while left > 0 {
        let take = left.min(SAMPLE_CHUNK);
        out.push((c, take as usize));
        left -= take;
        c += 1;
    }
    out
}

/// Sample points as exact numerators over `den = (m^D, n^D)`.
///
/// One-dimensional sample sets use only the first coordinate; the second
/// is zero over a denominator of one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Samples {
    pub dim: u32,
    pub den: [u128; 2],
    pub coords: Vec<[u128; 2]>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn exact(&self, i: usize) -> (Q, Q) {
        let c = self.coords[i];
        (
            Q::new(BigInt::from(c[0]), BigInt::from(self.den[0])),
            Q::new(BigInt::from(c[1]), BigInt::from(self.den[1])),
        )
    }

    pub fn x_marginal(&self) -> Samples {
        Samples { dim: 1, den: [self.den[0], 1], coords: self.coords.iter().map(|c| [c[0], 0]).collect() }
    }

    pub fn y_marginal(&self) -> Samples {
        Samples { dim: 1, den: [self.den[1], 1], coords: self.coords.iter().map(|c| [c[1], 0]).collect() }
    }

    /// Concatenate chunk outputs in chunk order.
    pub fn from_chunks(dim: u32, den: [u128; 2], chunks: Vec<Vec<[u128; 2]>>) -> Samples {
        Samples { dim, den, coords: chunks.into_iter().flatten().collect() }
    }
}

fn check_sampling(n: u64, digit_depth: usize) -> Result<()> {
    if n == 0 {
        return Err(CoreError::InvalidArgument("sample size must be at least 1".into()));
    }
    if digit_depth == 0 {
        return Err(CoreError::InvalidArgument("digit depth must be at least 1".into()));
    }
    Ok(())
}

/// Denominators `(m^D, n^D)` for a carpet sample at digit depth `D`.
pub fn sample_denominators(c: &Carpet, digit_depth: usize) -> Result<[u128; 2]> {
    Ok([checked_pow(c.m(), digit_depth)?, checked_pow(c.n(), digit_depth)?])
}

/// Draw one chunk of a self-affine sample. Each point is the lower-left
/// corner of the depth-`digit_depth` cylinder of an i.i.d. digit word.
pub fn sample_chunk(c: &Carpet, spec: &BernoulliSpec, chunk: u64, count: usize, digit_depth: usize) -> Vec<[u128; 2]> {
    let (m, n) = (c.m() as u128, c.n() as u128);
    let mut rng = chunk_rng(spec.seed, chunk);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (mut x, mut y) = (0u128, 0u128);
        for _ in 0..digit_depth {
            let (i, j) = spec.support[pick(&spec.cum, rng.next_u64()) as usize];
            x = x * m + i as u128;
            y = y * n + j as u128;
        }
        out.push([x, y]);
    }
    out
}

/// `n` points of the self-affine measure `π_m × π_n(spec^ℕ)`.
pub fn sample_self_affine(c: &Carpet, spec: &BernoulliSpec, n: u64, digit_depth: usize) -> Result<Samples> {
    check_sampling(n, digit_depth)?;
    let den = sample_denominators(c, digit_depth)?;
    let chunks = chunk_plan(n).into_iter().map(|(ci, cnt)| sample_chunk(c, spec, ci, cnt, digit_depth)).collect();
    Ok(Samples::from_chunks(2, den, chunks))
}

/// Sampler for the conditional measure on the horizontal fiber coded by
/// `ω`: the `k`-th x-digit is drawn from the spec restricted to row `ω_k`.
#[derive(Clone, Debug)]
pub struct FiberSampler {
    m: u64,
    seed: u64,
    den: u128,
    steps: Vec<(Vec<u32>, Vec<u128>)>,
}

pub fn conditional_fiber_sampler(
    c: &Carpet,
    spec: &BernoulliSpec,
    omega: &SymbolSequence,
    digit_depth: usize,
) -> Result<FiberSampler> {
    if digit_depth == 0 {
        return Err(CoreError::InvalidArgument("digit depth must be at least 1".into()));
    }
    if omega.alphabet() as u64 > c.n() {
        return Err(CoreError::InvalidArgument(format!(
            "row sequence alphabet {} exceeds the carpet height {}",
            omega.alphabet(),
            c.n()
        )));
    }
    let den = checked_pow(c.m(), digit_depth)?;
    let mut tables: BTreeMap<u32, (Vec<u32>, Vec<u128>)> = BTreeMap::new();
    let mut steps = Vec::with_capacity(digit_depth);
    for k in 0..digit_depth {
        let row = omega.at(k as u64);
        if !tables.contains_key(&row) {
            let (xs, ws): (Vec<u32>, Vec<Q>) = spec
                .support
                .iter()
                .zip(&spec.probabilities)
                .filter(|(p, _)| p.1 == row)
                .map(|(p, w)| (p.0, w.clone()))
                .unzip();
            if xs.is_empty() {
                return Err(CoreError::ZeroProbabilityRow { row, position: k });
            }
            let total: Q = ws.iter().sum();
            let normalized: Vec<Q> = ws.iter().map(|w| w / &total).collect();
            tables.insert(row, (xs, cumulative_thresholds(&normalized)?));
        }
        steps.push(tables[&row].clone());
    }
    Ok(FiberSampler { m: c.m(), seed: spec.seed, den, steps })
}

impl FiberSampler {
    pub fn digit_depth(&self) -> usize {
        self.steps.len()
    }

    pub fn sample_chunk(&self, chunk: u64, count: usize) -> Vec<[u128; 2]> {
        let m = self.m as u128;
        let mut rng = chunk_rng(self.seed, chunk);
        (0..count)
            .map(|_| {
                let mut x = 0u128;
                for (xs, cum) in &self.steps {
                    x = x * m + xs[pick(cum, rng.next_u64()) as usize] as u128;
                }
                [x, 0]
            })
            .collect()
    }

    pub fn sample(&self, n: u64) -> Result<Samples> {
        check_sampling(n, self.steps.len())?;
        let chunks = chunk_plan(n).into_iter().map(|(ci, cnt)| self.sample_chunk(ci, cnt)).collect();
        Ok(Samples::from_chunks(1, [self.den, 1], chunks))
    }
}

fn cell_of(num: u128, den: u128, scale: u128) -> Result<u128> {
    let prod = num
        .checked_mul(scale)
        .ok_or_else(|| CoreError::Overflow(format!("cell index {} * {} overflows", num, scale)))?;
    Ok(prod / den)
}

fn interleave(cells: [u128; 2], dim: u32, base: u128, depth: u32) -> u128 {
    if dim == 1 {
        return cells[0];
    }
    let mut dx = vec![0u128; depth as usize];
    let mut dy = vec![0u128; depth as usize];
    let (mut x, mut y) = (cells[0], cells[1]);
    for l in (0..depth as usize).rev() {
        dx[l] = x % base;
        dy[l] = y % base;
        x /= base;
        y /= base;
    }
    let mut code = 0u128;
    for l in 0..depth as usize {
        code = (code * base + dx[l]) * base + dy[l];
    }
    code
}

fn deinterleave(code: u128, dim: u32, base: u128, depth: u32) -> [u128; 2] {
    if dim == 1 {
        return [code, 0];
    }
    let mut c = code;
    let (mut x, mut y) = (0u128, 0u128);
    let mut px = 1u128;
    for _ in 0..depth {
        y += (c % base) * px;
        c /= base;
        x += (c % base) * px;
        c /= base;
        px *= base;
    }
    [x, y]
}

/// Counts of samples per `base`-adic cell of side `base^{-depth}`.
///
/// Cells are keyed by digit-interleaved codes, so coarsening is integer
/// division of the key and preserves the sort order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridHistogram {
    dim: u32,
    base: u64,
    depth: u32,
    cells: Vec<(u128, u64)>,
    total: u64,
}

impl GridHistogram {
    pub fn from_samples(s: &Samples, base: u64, depth: u32) -> Result<GridHistogram> {
        if base < 2 {
            return Err(CoreError::InvalidBase(base));
        }
        if s.dim != 1 && s.dim != 2 {
            return Err(CoreError::InvalidArgument(format!("dimension {} is not 1 or 2", s.dim)));
        }
        checked_pow(base, (s.dim * depth) as usize)?;
        let scale = checked_pow(base, depth as usize)?;
        let b = base as u128;
        let mut codes = Vec::with_capacity(s.coords.len());
        for p in &s.coords {
            let cx = cell_of(p[0], s.den[0], scale)?;
            let cy = if s.dim == 2 { cell_of(p[1], s.den[1], scale)? } else { 0 };
            codes.push(interleave([cx, cy], s.dim, b, depth));
        }
        codes.sort_unstable();
        let mut cells: Vec<(u128, u64)> = Vec::new();
        for c in codes {
            match cells.last_mut() {
                Some((k, n)) if *k == c => *n += 1,
                _ => cells.push((c, 1)),
            }
        }
        Ok(GridHistogram { dim: s.dim, base, depth, cells, total: s.coords.len() as u64 })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    /// Occupied cells as `([ix, iy], count)`.
    pub fn counts(&self) -> Vec<([u128; 2], u64)> {
        let b = self.base as u128;
        self.cells.iter().map(|&(c, n)| (deinterleave(c, self.dim, b, self.depth), n)).collect()
    }

    pub fn coarsen(&self, depth: u32) -> Result<GridHistogram> {
        if depth > self.depth {
            return Err(CoreError::InsufficientDepth { need: depth as usize, have: self.depth as usize });
        }
        let div = checked_pow(self.base, (self.dim * (self.depth - depth)) as usize)?;
        let mut cells: Vec<(u128, u64)> = Vec::new();
        for &(c, n) in &self.cells {
            let k = c / div;
            match cells.last_mut() {
                Some((kk, nn)) if *kk == k => *nn += n,
                _ => cells.push((k, n)),
            }
        }
        Ok(GridHistogram { depth, cells, ..self.clone() })
    }

    /// Pool two histograms over the same grid.
    pub fn merge(&self, o: &GridHistogram) -> Result<GridHistogram> {
        if (self.dim, self.base, self.depth) != (o.dim, o.base, o.depth) {
            return Err(CoreError::InvalidArgument("histograms live on different grids".into()));
        }
        let mut map: BTreeMap<u128, u64> = self.cells.iter().copied().collect();
        for &(c, n) in &o.cells {
            *map.entry(c).or_insert(0) += n;
        }
        Ok(GridHistogram { cells: map.into_iter().collect(), total: self.total + o.total, ..self.clone() })
    }

    /// Shannon entropy of the empirical cell distribution, in nats.
    pub fn entropy(&self) -> f64 {
        let n = self.total as f64;
        let s: f64 = self.cells.iter().map(|&(_, c)| xlogx(c as f64)).sum();
        libm::log(n) - s / n
    }
}

fn xlogx(c: f64) -> f64 {
    if c > 0.0 {
        c * libm::log(c)
    } else {
        0.0
    }
}

/// Least-squares entropy-dimension estimate over a depth window.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub base: u64,
    pub window: (u32, u32),
    pub samples: u64,
    /// `(k, H(μ_N, cells of side base^{-k}))` in nats.
    pub entropies: Vec<(u32, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Slope of `H(μ_N, base^{-k} cells)` against `k log base` for `k` in the
/// window. The histogram must be built at depth at least `k_max`, and the
/// deepest grid may have at most `N/8` cells; past that, the empirical
/// entropy saturates at `log N`.
pub fn entropy_dim_estimate(hist: &GridHistogram, window: (u32, u32)) -> Result<EntropyEstimate> {
    let (k0, k1) = window;
    if k1 < k0 || k1 - k0 < 2 {
        return Err(CoreError::InvalidArgument(format!("window {}..={} has fewer than 3 depths", k0, k1)));
    }
    if k1 > hist.depth {
        return Err(CoreError::InsufficientDepth { need: k1 as usize, have: hist.depth as usize });
    }
    let cells = checked_pow(hist.base, (hist.dim * k1) as usize)?;
    if cells.saturating_mul(8) > hist.total as u128 {
        return Err(CoreError::WindowTooDeep { samples: hist.total, cells, depth: k1 });
    }
    let lb = libm::log(hist.base as f64);
    let mut entropies = Vec::new();
    for k in k0..=k1 {
        entropies.push((k, hist.coarsen(k)?.entropy()));
    }
    let xs: Vec<f64> = entropies.iter().map(|(k, _)| *k as f64 * lb).collect();
    let ys: Vec<f64> = entropies.iter().map(|(_, h)| *h).collect();
    let (slope, intercept, residual) = fit_line(&xs, &ys);
    Ok(EntropyEstimate { base: hist.base, window, samples: hist.total, entropies, slope, intercept, residual })
}

/// Histogram the samples at depth `window.1` and estimate.
pub fn entropy_dim_from_samples(s: &Samples, base: u64, window: (u32, u32)) -> Result<EntropyEstimate> {
    entropy_dim_estimate(&GridHistogram::from_samples(s, base, window.1)?, window)
}

pub const DEFAULT_C1: f64 = 8.0;

/// Outcome of the restricted-entropy comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedEntropy {
    /// Minimum over ball centres of the entropy of the normalised
    /// restriction to the ball's complement.
    pub lhs: f64,
    /// `H(μ) − C₁·k·√ε`.
    pub rhs: f64,
    pub pass: bool,
    pub entropy: f64,
    /// Largest empirical mass of any ball on the centre grid.
    pub sup_ball_mass: f64,
    /// Grid vertex (in cells) attaining `lhs`.
    pub worst_center: [u128; 2],
    pub samples: u64,
}

struct Prefix2 {
    w: usize,
    count: Vec<u64>,
    clogc: Vec<f64>,
}

impl Prefix2 {
    fn build(gx: usize, gy: usize, dense: &[u64]) -> Prefix2 {
        let w = gx + 1;
        let mut count = vec![0u64; (gx + 1) * (gy + 1)];
        let mut clogc = vec![0f64; (gx + 1) * (gy + 1)];
        for y in 0..gy {
            for x in 0..gx {
                let c = dense[y * gx + x];
                let i = (y + 1) * w + x + 1;
                count[i] = c + count[i - 1] + count[i - w] - count[i - w - 1];
                clogc[i] = xlogx(c as f64) + clogc[i - 1] + clogc[i - w] - clogc[i - w - 1];
            }
        }
        Prefix2 { w, count, clogc }
    }

    /// Sums over cells `[x0, x1) × [y0, y1)`.
    fn sum(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> (u64, f64) {
        let w = self.w;
        let (a, b, c, d) = (y1 * w + x1, y0 * w + x1, y1 * w + x0, y0 * w + x0);
        (
            self.count[a] + self.count[d] - self.count[b] - self.count[c],
            self.clogc[a] + self.clogc[d] - self.clogc[b] - self.clogc[c],
        )
    }
}

fn ceil_q_u(x: &Q) -> u128 {
    let (q, r) = x.numer().div_rem(x.denom());
    let q = q.to_u128().unwrap_or(u128::MAX);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

struct BallScan {
    entropy: f64,
    lhs: f64,
    worst: [u128; 2],
    max_ball: u64,
    n: u64,
}

fn scan_balls(hist: &GridHistogram, delta: &Q, k: u32) -> Result<BallScan> {
    if *delta <= Q::zero() || *delta >= Q::one() {
        return Err(CoreError::InvalidArgument(format!("delta {} must lie in (0, 1)", delta)));
    }
    let g = checked_pow(hist.base, k as usize)?;
    if Q::new(BigInt::one(), BigInt::from(g)) > *delta {
        return Err(CoreError::Precondition(format!("cell side {}^-{} exceeds delta {}", hist.base, k, delta)));
    }
    let total_cells = checked_pow(hist.base, (hist.dim * k) as usize)?;
    if total_cells > 1 << 24 {
        return Err(CoreError::InvalidArgument(format!("grid of {} cells is too large to scan densely", total_cells)));
    }
    let h = hist.coarsen(k)?;
    let gx = g as usize;
    let gy = if h.dim == 2 { gx } else { 1 };
    let mut dense = vec![0u64; gx * gy];
    for ([x, y], c) in h.counts() {
        dense[y as usize * gx + x as usize] = c;
    }
    let pre = Prefix2::build(gx, gy, &dense);
    let n = h.total;
    let (_, s_all) = pre.sum(0, gx, 0, gy);
    let entropy = libm::log(n as f64) - s_all / n as f64;
    // A ball centred at vertex j meets cells j−R ..= j+R−1 with R = ⌈δ·g⌉.
    let r = ceil_q_u(&(delta * Q::from_integer(BigInt::from(g)))) as usize;
    let span = |j: usize, len: usize| (j.saturating_sub(r), (j + r).min(len));
    let ycenters: Vec<usize> = if h.dim == 2 { (0..=gy).collect() } else { vec![0] };
    let mut scan = BallScan { entropy, lhs: f64::INFINITY, worst: [0, 0], max_ball: 0, n };
    for &jy in &ycenters {
        let (y0, y1) = if h.dim == 2 { span(jy, gy) } else { (0, 1) };
        for jx in 0..=gx {
            let (x0, x1) = span(jx, gx);
            let (cnt, clogc) = pre.sum(x0, x1, y0, y1);
            scan.max_ball = scan.max_ball.max(cnt);
            let rest = n - cnt;
            if rest == 0 {
                continue;
            }
            let hr = libm::log(rest as f64) - (s_all - clogc) / rest as f64;
            if hr < scan.lhs {
                scan.lhs = hr;
                scan.worst = [jx as u128, jy as u128];
            }
        }
    }
    Ok(scan)
}

/// Largest empirical mass of a sup-norm ball `B(y, δ)` with `y` on the
/// depth-`k` vertex grid; each ball is the union of the cells it meets.
pub fn sup_ball_mass(hist: &GridHistogram, delta: &Q, k: u32) -> Result<Q> {
    let s = scan_balls(hist, delta, k)?;
    Ok(Q::new(BigInt::from(s.max_ball), BigInt::from(s.n)))
}

/// Compare the entropy of `μ` with the entropy of its normalised
/// restrictions to the complements of balls `B(y, δ)`, on the depth-`k`
/// grid. Fails with a precondition error when some ball carries more than
/// `ε` of the empirical mass.
pub fn restricted_entropy_check(hist: &GridHistogram, delta: &Q, eps: &Q, k: u32, c1: f64) -> Result<RestrictedEntropy> {
    if *eps <= Q::zero() {
        return Err(CoreError::InvalidArgument(format!("epsilon {} must be positive", eps)));
    }
    let s = scan_balls(hist, delta, k)?;
    let sup_ball = Q::new(BigInt::from(s.max_ball), BigInt::from(s.n));
    if sup_ball > *eps {
        return Err(CoreError::Precondition(format!(
            "empirical sup-ball mass {} exceeds epsilon {}",
            sup_ball, eps
        )));
    }
    let rhs = s.entropy - c1 * k as f64 * libm::sqrt(to_f64(eps));
    Ok(RestrictedEntropy {
        lhs: s.lhs,
        rhs,
        pass: s.lhs >= rhs,
        entropy: s.entropy,
        sup_ball_mass: s.max_ball as f64 / s.n as f64,
        worst_center: s.worst,
        samples: s.n,
    })
}

/// Dyadic cell of `a·u/den + t` at depth `k`, exactly.
struct AxisMap {
    num: BigInt,
    t_num: BigInt,
    den: BigInt,
}

impl AxisMap {
    fn new(a: &Q, t: &Q, sample_den: u128) -> AxisMap {
        // a·u/D + t = (a_n·t_d·u + t_n·a_d·D) / (a_d·t_d·D)
        let d = BigInt::from(sample_den);
        AxisMap {
            num: a.numer() * t.denom(),
            t_num: t.numer() * a.denom() * &d,
            den: a.denom() * t.denom() * d,
        }
    }

    fn cell(&self, u: u128, k: u32) -> Result<i128> {
        let v = ((&self.num * BigInt::from(u) + &self.t_num) << k as usize).div_floor(&self.den);
        v.to_i128().ok_or_else(|| CoreError::Overflow("mapped cell index exceeds i128".into()))
    }
}

fn mapped_cells(s: &Samples, g: &AffinePlaneMap, k: u32) -> Result<Vec<(i128, i128)>> {
    if s.dim != 2 {
        return Err(CoreError::InvalidArgument("the TV experiment needs planar samples".into()));
    }
    let swap = g.orientation == Orientation::Antidiagonal;
    // Diagonal: (a x + tx, d y + ty). Antidiagonal: (a y + tx, d x + ty).
    let (src_x, src_y) = if swap { (1, 0) } else { (0, 1) };
    let mx = AxisMap::new(&g.a, &g.tx, s.den[src_x]);
    let my = AxisMap::new(&g.d, &g.ty, s.den[src_y]);
    s.coords.iter().map(|p| Ok((mx.cell(p[src_x], k)?, my.cell(p[src_y], k)?))).collect()
}

fn run_length(mut cells: Vec<(i128, i128)>) -> Vec<((i128, i128), u64)> {
    cells.sort_unstable();
    let mut out: Vec<((i128, i128), u64)> = Vec::new();
    for c in cells {
        match out.last_mut() {
            Some((k, n)) if *k == c => *n += 1,
            _ => out.push((c, 1)),
        }
    }
    out
}

/// One depth of a total-variation curve.
#[derive(Clone, Debug, PartialEq)]
pub struct TvPoint {
    pub k: u32,
    pub tv: f64,
    /// Cells occupied by either sample.
    pub cells: usize,
}

/// Total variation between dyadic cell histograms of `g(a)` and `b` for
/// every depth in the window.
pub fn tv_curve(a: &Samples, g: &AffinePlaneMap, b: &Samples, window: (u32, u32)) -> Result<Vec<TvPoint>> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidArgument("empty sample".into()));
    }
    if window.1 < window.0 || window.1 > 60 {
        return Err(CoreError::InvalidArgument(format!("bad depth window {}..={}", window.0, window.1)));
    }
    let kmax = window.1;
    let fa = mapped_cells(a, g, kmax)?;
    let fb = mapped_cells(b, &AffinePlaneMap::identity(), kmax)?;
    // Accumulate |a_i·N_b − b_i·N_a| exactly; divide once at the end.
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let mut out = Vec::new();
    for k in window.0..=kmax {
        let s = kmax - k;
        let ha = run_length(fa.iter().map(|&(x, y)| (x >> s, y >> s)).collect());
        let hb = run_length(fb.iter().map(|&(x, y)| (x >> s, y >> s)).collect());
        let (mut i, mut j, mut acc, mut cells) = (0, 0, 0u128, 0usize);
        while i < ha.len() || j < hb.len() {
            cells += 1;
            let ord = match (ha.get(i), hb.get(j)) {
                (Some(p), Some(q)) => p.0.cmp(&q.0),
                (Some(_), None) => core::cmp::Ordering::Less,
                _ => core::cmp::Ordering::Greater,
            };
            match ord {
                core::cmp::Ordering::Less => {
                    acc += ha[i].1 as u128 * nb;
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    acc += hb[j].1 as u128 * na;
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    acc += (ha[i].1 as u128 * nb).abs_diff(hb[j].1 as u128 * na);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.push(TvPoint { k, tv: acc as f64 / (2 * na * nb) as f64, cells });
    }
    Ok(out)
}

/// Status of the dimension gap required before singularity is expected.
#[derive(Clone, Debug, PartialEq)]
pub enum GapHypothesis {
    Holds { kappa: f64, bound: f64 },
    Fails { kappa: f64, bound: f64 },
    NotChecked(String),
}

/// An observed TV curve with its provenance. No verdict is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularityObservation {
    pub curve: Vec<TvPoint>,
    pub samples: u64,
    pub digit_depth: usize,
    pub seeds: (u64, u64),
    pub hypothesis: GapHypothesis,
    pub note: &'static str,
}

pub const SINGULARITY_NOTE: &str =
    "observation only: TV near 1 at fine depths is consistent with mutual singularity but does not prove it";

fn is_uniform_on_digits(c: &Carpet, spec: &BernoulliSpec) -> bool {
    spec.support.len() == c.digits().len() && spec.probabilities.windows(2).all(|w| w[0] == w[1])
}

fn equal_fibers(c: &Carpet) -> bool {
    let sizes: Vec<usize> = fibers(c).iter().map(|f| f.len()).filter(|&s| s > 0).collect();
    sizes.windows(2).all(|w| w[0] == w[1])
}

/// Exact dimension of the measure when it is uniform on a carpet whose
/// nonempty fibers all have the same size; then it equals `dim_B`.
fn closed_form_measure_dim(c: &Carpet, spec: &BernoulliSpec) -> Option<DimExpr> {
    (is_uniform_on_digits(c, spec) && equal_fibers(c)).then(|| dims(c).dim_box)
}

pub fn gap_hypothesis(f: &Carpet, mu: &BernoulliSpec, e: &Carpet, nu: &BernoulliSpec, orientation: Orientation) -> GapHypothesis {
    let bound = bound_intersection(f, e, orientation);
    if !bound.warnings.is_empty() {
        return GapHypothesis::NotChecked(bound.warnings.join("; "));
    }
    let (Some(a), Some(b)) = (closed_form_measure_dim(f, mu), closed_form_measure_dim(e, nu)) else {
        return GapHypothesis::NotChecked("measure dimension has no closed form here (non-uniform weights or fibers)".into());
    };
    let ia = a.enclosure(128);
    let ib = b.enclosure(128);
    let kappa = if ia.lo >= ib.hi {
        ia
    } else if ib.lo >= ia.hi {
        ib
    } else {
        Interval { lo: ia.lo.clone().max(ib.lo.clone()), hi: ia.hi.clone().max(ib.hi.clone()) }
    };
    let bi = bound.value.enclosure(128);
    let (kf, bf) = (kappa.mid_f64(), bi.mid_f64());
    if kappa.lo > bi.hi {
        GapHypothesis::Holds { kappa: kf, bound: bf }
    } else if kappa.hi <= bi.lo || a.symbolically_equal(&bound.value) || b.symbolically_equal(&bound.value) {
        GapHypothesis::Fails { kappa: kf, bound: bf }
    } else {
        GapHypothesis::NotChecked(String::from("kappa and the bound are not separated at 128 bits"))
    }
}

/// Sample `n` points from each measure, push the first through `g`, and
/// record the TV curve over the window.
#[allow(clippy::too_many_arguments)]
pub fn singularity_experiment(
    f: &Carpet,
    mu: &BernoulliSpec,
    g: &AffinePlaneMap,
    e: &Carpet,
    nu: &BernoulliSpec,
    window: (u32, u32),
    n: u64,
    digit_depth: usize,
) -> Result<SingularityObservation> {
    let a = sample_self_affine(f, mu, n, digit_depth)?;
    let b = sample_self_affine(e, nu, n, digit_depth)?;
    let curve = tv_curve(&a, g, &b, window)?;
    Ok(SingularityObservation {
        curve,
        samples: n,
        digit_depth,
        seeds: (mu.seed, nu.seed),
        hypothesis: gap_hypothesis(f, mu, e, nu, g.orientation),
        note: SINGULARITY_NOTE,
    })
}

/// Empirical density of `{i < n : pred(i)}` over the full horizon and over
/// its second half, returned as `(min, max)`.
pub fn density_of_visits(mut pred: impl FnMut(u64) -> bool, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(CoreError::InvalidArgument("horizon must be at least 1".into()));
    }
    let half = n / 2;
    let (mut all, mut late) = (0u64, 0u64);
    for i in 0..n {
        if pred(i) {
            all += 1;
            if i >= half {
                late += 1;
            }
        }
    }
    let d_all = all as f64 / n as f64;
    let d_late = late as f64 / (n - half) as f64;
    Ok((d_all.min(d_late), d_all.max(d_late)))
}

/// Lebesgue measure of the union of the `bins` equal arcs of the circle
/// that contain at least one of the points.
pub fn covered_measure(points: &[f64], bins: usize) -> f64 {
    if bins == 0 {
        return 0.0;
    }
    let mut hit = vec![false; bins];
    for &p in points {
        let f = p - libm::floor(p);
        let i = ((f * bins as f64) as usize).min(bins - 1);
        hit[i] = true;
    }
    hit.iter().filter(|h| **h).count() as f64 / bins as f64
}
