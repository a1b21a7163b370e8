//! The skew products over the rotation, cylinder measures and their
//! magnification, and the empirical CP chain built from a line slice.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{CoreError, Result};
use crate::numeric::{frac_q, pow_u, to_f64, Q};
use crate::rotation::{orbit_f64, r_k, rotation_code_prefix, star_discrepancy, AnglePoint, LogRatioAngle};
use crate::slicer::{coded_schedule, line_meets_box_enclosed, CellBox, Decision, Line};
use crate::symbolic::{CodedProduct, GridRect, Pair, SymbolSequence};

fn t_map(m: u64, x: &Q) -> Q {
    frac_q(&(x * Q::from_integer(BigInt::from(m))))
}

/// `Φ_t(z)`: both coordinates expand when `t ∈ [1 − θ, 1)`, otherwise
/// only the second.
pub fn phi_t(t: &AnglePoint, angle: &LogRatioAngle, m1: u64, m2: u64, z: &(Q, Q)) -> Result<(Q, Q)> {
    let x = if t.in_coding_interval(angle)? { t_map(m1, &z.0) } else { z.0.clone() };
    Ok((x, t_map(m2, &z.1)))
}

/// A point of the base of the skew product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UState {
    pub z: (Q, Q),
    pub t: AnglePoint,
    pub omega: SymbolSequence,
    pub eta: SymbolSequence,
}

/// `U(z, t, ω, η) = (Φ_t(z), R_θ(t), σ_t(ω), σ(η))`.
pub fn u_map(s: &UState, angle: &LogRatioAngle, m1: u64, m2: u64) -> Result<UState> {
    let hit = s.t.in_coding_interval(angle)?;
    Ok(UState {
        z: (if hit { t_map(m1, &s.z.0) } else { s.z.0.clone() }, t_map(m2, &s.z.1)),
        t: s.t.rotate(angle)?,
        omega: if hit { s.omega.shift(1) } else { s.omega.clone() },
        eta: s.eta.shift(1),
    })
}

/// Closed form of `U^k` on the `z` coordinate next to the iterated value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFormReport {
    pub r: u64,
    pub closed: (Q, Q),
    pub iterated: (Q, Q),
    pub equal: bool,
}

pub fn u_iterate_closed_form(z: &(Q, Q), t: &AnglePoint, angle: &LogRatioAngle, m1: u64, m2: u64, k: usize) -> Result<ClosedFormReport> {
    let r = r_k(t, angle, k)?;
    let closed = (
        frac_q(&(&z.0 * Q::from_integer(BigInt::from(pow_u(m1, r as u32))))),
        frac_q(&(&z.1 * Q::from_integer(BigInt::from(pow_u(m2, k as u32))))),
    );
    let mut zz = z.clone();
    let mut tt = t.clone();
    for _ in 0..k {
        zz = phi_t(&tt, angle, m1, m2, &zz)?;
        tt = tt.rotate(angle)?;
    }
    let equal = zz == closed;
    Ok(ClosedFormReport { r, closed, iterated: zz, equal })
}

/// A probability measure on depth-`d` cylinders, with exact weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    depth: usize,
    weights: BTreeMap<Vec<Pair>, Q>,
    /// Masses of every prefix of every support word, including the empty one.
    prefixes: BTreeMap<Vec<Pair>, Q>,
}

impl EmpiricalMeasure {
    pub fn new(depth: usize, weights: impl IntoIterator<Item = (Vec<Pair>, Q)>) -> Result<Self> {
        let mut w: BTreeMap<Vec<Pair>, Q> = BTreeMap::new();
        for (word, q) in weights {
            if word.len() != depth {
                return Err(CoreError::InvalidArgument(format!("word of length {} in a depth-{} measure", word.len(), depth)));
            }
            if q.is_negative() {
                return Err(CoreError::ProbabilityOutOfRange(format!("{}", q)));
            }
            if !q.is_zero() {
                *w.entry(word).or_insert_with(Q::zero) += q;
            }
        }
        let total: Q = w.values().cloned().sum();
        if total != Q::one() {
            return Err(CoreError::ProbabilitySum(format!("{}", total)));
        }
        let mut prefixes: BTreeMap<Vec<Pair>, Q> = BTreeMap::new();
        for (word, q) in &w {
            for l in 0..=depth {
                *prefixes.entry(word[..l].to_vec()).or_insert_with(Q::zero) += q;
            }
        }
        Ok(EmpiricalMeasure { depth, weights: w, prefixes })
    }

    /// Equal weights on the given words (duplicates collapse).
    pub fn uniform(depth: usize, words: impl IntoIterator<Item = Vec<Pair>>) -> Result<Self> {
        let set: BTreeSet<Vec<Pair>> = words.into_iter().collect();
        if set.is_empty() {
            return Err(CoreError::ZeroMass);
        }
        let w = Q::new(BigInt::one(), BigInt::from(set.len()));
        Self::new(depth, set.into_iter().map(|s| (s, w.clone())))
    }

    pub fn point_mass(word: Vec<Pair>) -> Self {
        let d = word.len();
        Self::new(d, [(word, Q::one())]).expect("a point mass is a probability")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &BTreeMap<Vec<Pair>, Q> {
        &self.weights
    }

    pub fn total(&self) -> Q {
        self.weights.values().cloned().sum()
    }

    /// `μ([w])` for `|w| <= depth`.
    pub fn mass(&self, w: &[Pair]) -> Result<Q> {
        if w.len() > self.depth {
            return Err(CoreError::InsufficientDepth { need: w.len(), have: self.depth });
        }
        Ok(self.prefixes.get(w).cloned().unwrap_or_else(Q::zero))
    }

    /// Support words extending `p`, with their weights.
    pub fn extending<'a>(&'a self, p: &'a [Pair]) -> impl Iterator<Item = (&'a Vec<Pair>, &'a Q)> + 'a {
        self.weights.range(p.to_vec()..).take_while(move |(w, _)| w.starts_with(p))
    }

    /// `μ` conditioned on `[p]` and shifted by `|p|`.
    pub fn condition_shift(&self, p: &[Pair]) -> Result<EmpiricalMeasure> {
        let m = self.mass(p)?;
        if m.is_zero() {
            return Err(CoreError::ZeroMass);
        }
        Self::new(self.depth - p.len(), self.extending(p).map(|(w, q)| (w[p.len()..].to_vec(), q / &m)))
    }
}

/// `M(μ, x) = (μ^{[x_1]}, σx)`.
pub fn magnify(mu: &EmpiricalMeasure, x: &[Pair]) -> Result<(EmpiricalMeasure, Vec<Pair>)> {
    if x.is_empty() || mu.depth == 0 {
        return Err(CoreError::InsufficientDepth { need: 1, have: x.len().min(mu.depth) });
    }
    Ok((mu.condition_shift(&x[..1])?, x[1..].to_vec()))
}

/// Depth-`d` cylinders of a coded product whose closed π-image meets the
/// line (a superset of the true preimage), in lexicographic order.
pub fn slice_preimage(cp: &CodedProduct, line: &Line, d: usize, budget: u64) -> Result<Vec<Vec<Pair>>> {
    let steps = coded_schedule(cp, d)?;
    let raw = cp.steps(d)?;
    let s = line.slope_enclosure(64);
    let c = line.intercept();
    let meets = |g: &GridRect| {
        line_meets_box_enclosed(&s, c, &CellBox::closed(&g.rect(cp.m1, cp.m2))) != Decision::No
    };
    let mut out = Vec::new();
    let mut visits = 0u64;
    let mut stack: Vec<(Vec<Pair>, GridRect)> = vec![(Vec::new(), GridRect::UNIT)];
    while let Some((word, g)) = stack.pop() {
        visits += 1;
        if visits > budget {
            return Err(CoreError::BudgetExhausted { budget, partial_lower: out.len() as u64 });
        }
        if !meets(&g) {
            continue;
        }
        let p = word.len();
        if p == d {
            out.push(word);
            continue;
        }
        for &x in raw[p].xs.iter().rev() {
            for &y in raw[p].ys.iter().rev() {
                let child = g.child(&steps[p], (x, y), cp.m1, cp.m2)?;
                let mut w = word.clone();
                w.push((x, y));
                stack.push((w, child));
            }
        }
    }
    Ok(out)
}

/// An atom of a chain distribution: the base measure conditioned on
/// `word[..level]` and shifted, the point `word[level..]`, the rotation
/// position, and how far `ω` and `η` have been shifted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicroState {
    pub measure: usize,
    pub word: Arc<[Pair]>,
    pub level: usize,
    pub t: AnglePoint,
    /// Coding of the starting position; the current prefix is `tau[level..]`.
    pub tau: Arc<[u8]>,
    pub omega_shift: u64,
    pub eta_shift: u64,
}

impl MicroState {
    pub fn point(&self) -> &[Pair] {
        &self.word[self.level..]
    }

    pub fn tau_prefix(&self) -> &[u8] {
        &self.tau[self.level..]
    }
}

/// A finite mixture of micro-states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainDistribution {
    pub measures: Vec<EmpiricalMeasure>,
    pub atoms: Vec<(MicroState, Q)>,
    pub omega: SymbolSequence,
    pub eta: SymbolSequence,
    /// Index of the chain term and its depth `n_k`.
    pub provenance: (usize, usize),
}

impl ChainDistribution {
    pub fn total(&self) -> Q {
        self.atoms.iter().map(|a| a.1.clone()).sum()
    }

    fn base(&self, s: &MicroState) -> &EmpiricalMeasure {
        &self.measures[s.measure]
    }

    /// The measure coordinate of an atom, materialised.
    pub fn measure_of(&self, s: &MicroState) -> Result<EmpiricalMeasure> {
        self.base(s).condition_shift(&s.word[..s.level])
    }

    pub fn omega_of(&self, s: &MicroState) -> SymbolSequence {
        self.omega.shift(s.omega_shift)
    }

    pub fn eta_of(&self, s: &MicroState) -> SymbolSequence {
        self.eta.shift(s.eta_shift)
    }

    /// `μ'([w])` for the atom's conditioned measure `μ'`.
    pub fn conditional_mass(&self, s: &MicroState, w: &[Pair]) -> Result<Q> {
        let base = self.base(s);
        let p = &s.word[..s.level];
        let den = base.mass(p)?;
        if den.is_zero() {
            return Err(CoreError::ZeroMass);
        }
        let mut full = p.to_vec();
        full.extend_from_slice(w);
        Ok(base.mass(&full)? / den)
    }

    /// Whether every atom's stored coding matches the coding of its `t`,
    /// over `len` symbols (or what remains).
    pub fn coding_consistent(&self, angle: &LogRatioAngle, len: usize) -> Result<bool> {
        let mut seen: Vec<(AnglePoint, Vec<u8>)> = Vec::new();
        for (s, _) in &self.atoms {
            let want = &s.tau_prefix()[..len.min(s.tau_prefix().len())];
            let code = match seen.iter().find(|(t, c)| t == &s.t && c.len() >= want.len()) {
                Some((_, c)) => c.clone(),
                None => {
                    let c = rotation_code_prefix(&s.t, angle, want.len())?;
                    seen.push((s.t.clone(), c.clone()));
                    c
                }
            };
            if code[..want.len()] != *want {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `M̂`: magnify the measure/point pair, rotate `t`, apply `σ_t` to `ω` and
/// `σ` to `η`, atom by atom.
pub fn m_hat(d: &ChainDistribution, angle: &LogRatioAngle) -> Result<ChainDistribution> {
    let mut rotated: Vec<(AnglePoint, AnglePoint)> = Vec::new();
    let mut atoms = Vec::with_capacity(d.atoms.len());
    for (s, w) in &d.atoms {
        if s.level >= s.word.len() || s.level >= s.tau.len() {
            return Err(CoreError::InsufficientDepth { need: s.level + 1, have: s.word.len().min(s.tau.len()) });
        }
        if d.conditional_mass(s, &s.word[s.level..=s.level])?.is_zero() {
            return Err(CoreError::ZeroMass);
        }
        let t = match rotated.iter().find(|(a, _)| a == &s.t) {
            Some((_, b)) => b.clone(),
            None => {
                let b = s.t.rotate(angle)?;
                rotated.push((s.t.clone(), b.clone()));
                b
            }
        };
        atoms.push((
            MicroState {
                measure: s.measure,
                word: s.word.clone(),
                level: s.level + 1,
                t,
                tau: s.tau.clone(),
                omega_shift: s.omega_shift + s.tau[s.level] as u64,
                eta_shift: s.eta_shift + 1,
            },
            w.clone(),
        ));
    }
    Ok(ChainDistribution { atoms, ..d.clone_shell() })
}

impl ChainDistribution {
    fn clone_shell(&self) -> ChainDistribution {
        ChainDistribution {
            measures: self.measures.clone(),
            atoms: Vec::new(),
            omega: self.omega.clone(),
            eta: self.eta.clone(),
            provenance: self.provenance,
        }
    }
}

/// `μ_k`, `P_k` and the Cesàro average `Q_k` of a slice.
#[derive(Clone, Debug)]
pub struct CpChain {
    pub n_k: usize,
    pub mu_k: EmpiricalMeasure,
    /// Lexicographically least word of `E` in each depth-`n_k` cylinder.
    pub representatives: Vec<Vec<Pair>>,
    pub p_k: ChainDistribution,
    pub q_k: ChainDistribution,
}

/// Build the chain from `E`, a set of words of common depth `>= n_k + 1`
/// (usually a [`slice_preimage`]), with `τ = v_{t0}`.
pub fn build_cp_chain(
    e: &[Vec<Pair>],
    n_k: usize,
    t0: &AnglePoint,
    angle: &LogRatioAngle,
    omega0: &SymbolSequence,
    eta0: &SymbolSequence,
    chain_index: usize,
) -> Result<CpChain> {
    let depth = e.first().ok_or_else(|| CoreError::InvalidArgument("empty slice set".into()))?.len();
    if e.iter().any(|w| w.len() != depth) {
        return Err(CoreError::InvalidArgument("slice words have different depths".into()));
    }
    if depth < n_k + 1 {
        return Err(CoreError::InsufficientDepth { need: n_k + 1, have: depth });
    }
    let mut reps: BTreeMap<&[Pair], &Vec<Pair>> = BTreeMap::new();
    for w in e {
        reps.entry(&w[..n_k]).and_modify(|r| if w < *r { *r = w }).or_insert(w);
    }
    let representatives: Vec<Vec<Pair>> = reps.into_values().cloned().collect();
    let mu_k = EmpiricalMeasure::uniform(depth, representatives.iter().cloned())?;
    let tau: Arc<[u8]> = rotation_code_prefix(t0, angle, depth)?.into();
    let weight = Q::new(BigInt::one(), BigInt::from(representatives.len()));
    let p_k = ChainDistribution {
        measures: vec![mu_k.clone()],
        atoms: representatives
            .iter()
            .map(|w| {
                (
                    MicroState {
                        measure: 0,
                        word: w.clone().into(),
                        level: 0,
                        t: t0.clone(),
                        tau: tau.clone(),
                        omega_shift: 0,
                        eta_shift: 0,
                    },
                    weight.clone(),
                )
            })
            .collect(),
        omega: omega0.clone(),
        eta: eta0.clone(),
        provenance: (chain_index, n_k),
    };
    let scale = Q::new(BigInt::one(), BigInt::from(n_k));
    let mut q_k = p_k.clone_shell();
    let mut cur = p_k.clone();
    for i in 0..n_k {
        if i > 0 {
            cur = m_hat(&cur, angle)?;
        }
        q_k.atoms.extend(cur.atoms.iter().map(|(s, w)| (s.clone(), w * &scale)));
    }
    Ok(CpChain { n_k, mu_k, representatives, p_k, q_k })
}

/// `H(D) = Σ w · (−log μ'([x_1])) / log m2` over atoms.
pub fn entropy_h(d: &ChainDistribution, m2: u64) -> Result<f64> {
    let lm = libm::log(m2 as f64);
    let mut h = 0.0;
    for (s, w) in &d.atoms {
        let p = d.conditional_mass(s, &s.word[s.level..=s.level])?;
        if p.is_zero() {
            return Err(CoreError::ZeroMass);
        }
        h += to_f64(w) * -libm::log(to_f64(&p)) / lm;
    }
    Ok(h)
}

/// Largest `|∫f dD − ∫∫f dμ dD|` over indicators of point cylinders of
/// length `1..=max_len`. Exact.
pub fn adaptedness_residual(d: &ChainDistribution, max_len: usize) -> Result<Q> {
    if max_len == 0 {
        return Ok(Q::zero());
    }
    let mut lhs: BTreeMap<Vec<Pair>, Q> = BTreeMap::new();
    // Group atoms by (measure, conditioning prefix) so each conditioned
    // measure is expanded once.
    let mut groups: BTreeMap<(usize, Vec<Pair>), Q> = BTreeMap::new();
    for (s, w) in &d.atoms {
        let pt = s.point();
        for l in 1..=max_len.min(pt.len()) {
            *lhs.entry(pt[..l].to_vec()).or_insert_with(Q::zero) += w;
        }
        *groups.entry((s.measure, s.word[..s.level].to_vec())).or_insert_with(Q::zero) += w;
    }
    let mut rhs: BTreeMap<Vec<Pair>, Q> = BTreeMap::new();
    for ((mi, p), gw) in &groups {
        let base = &d.measures[*mi];
        let den = base.mass(p)?;
        if den.is_zero() {
            return Err(CoreError::ZeroMass);
        }
        for (word, q) in base.extending(p) {
            let rest = &word[p.len()..];
            for l in 1..=max_len.min(rest.len()) {
                *rhs.entry(rest[..l].to_vec()).or_insert_with(Q::zero) += gw * q / &den;
            }
        }
    }
    let keys: BTreeSet<&Vec<Pair>> = lhs.keys().chain(rhs.keys()).collect();
    let zero = Q::zero();
    Ok(keys
        .into_iter()
        .map(|k| (lhs.get(k).unwrap_or(&zero) - rhs.get(k).unwrap_or(&zero)).abs())
        .max()
        .unwrap_or(zero))
}

/// Star discrepancy of `{R_θ^i(t0)}`, `i < horizon`.
pub fn t_marginal_discrepancy(t0: &AnglePoint, angle: &LogRatioAngle, horizon: usize) -> f64 {
    star_discrepancy(&mut orbit_f64(t0, angle, horizon))
}

/// Birkhoff-average deviations along the orbit of `Z(t, ω, η) = (R_θ t, σ_t ω, σ η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericityReport {
    pub n: usize,
    pub omega_deviation: f64,
    pub eta_deviation: f64,
    /// Over the intervals `[j/10, (j+1)/10)`.
    pub t_deviation: f64,
    pub max_deviation: f64,
}

pub fn z_orbit_genericity(
    t: &AnglePoint,
    angle: &LogRatioAngle,
    omega: &SymbolSequence,
    eta: &SymbolSequence,
    alpha1: &[f64],
    alpha2: &[f64],
    n: usize,
) -> Result<GenericityReport> {
    if n == 0 {
        return Err(CoreError::InvalidArgument("orbit length must be positive".into()));
    }
    let code = rotation_code_prefix(t, angle, n)?;
    let ones: usize = code.iter().map(|&b| b as usize).sum();
    let om = omega.prefix(ones + 1);
    let et = eta.prefix(n);
    let mut c1 = vec![0u64; alpha1.len()];
    let mut c2 = vec![0u64; alpha2.len()];
    let mut r = 0usize;
    for i in 0..n {
        if let Some(c) = c1.get_mut(om[r] as usize) {
            *c += 1;
        }
        if let Some(c) = c2.get_mut(et[i] as usize) {
            *c += 1;
        }
        r += code[i] as usize;
    }
    let dev = |c: &[u64], a: &[f64]| {
        c.iter().zip(a).map(|(&k, &p)| (k as f64 / n as f64 - p).abs()).fold(0.0, f64::max)
    };
    let mut bins = [0u64; 10];
    for x in orbit_f64(t, angle, n) {
        bins[((x * 10.0) as usize).min(9)] += 1;
    }
    let t_dev = bins.iter().map(|&k| (k as f64 / n as f64 - 0.1).abs()).fold(0.0, f64::max);
    let (o, e) = (dev(&c1, alpha1), dev(&c2, alpha2));
    Ok(GenericityReport { n, omega_deviation: o, eta_deviation: e, t_deviation: t_dev, max_deviation: o.max(e).max(t_dev) })
}
