use std::sync::Arc;

use carpetslice_core::dynamics::*;
use carpetslice_core::numeric::{q, Q};
use carpetslice_core::rotation::{rotation_code_prefix, star_discrepancy, orbit_f64, theta_of, AnglePoint, LogRatioAngle};
use carpetslice_core::slicer::{count_line_cells, Line, PartitionKind, DEFAULT_NODE_BUDGET};
use carpetslice_core::symbolic::{make_sequence, CodedProduct, Pair, SequenceSpec, SymbolSequence};
use carpetslice_core::CoreError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn angle() -> LogRatioAngle {
    theta_of(3, 2).unwrap()
}

fn tq(t: Q) -> AnglePoint {
    AnglePoint::rational(&angle(), t).unwrap()
}

fn const_seq() -> SymbolSequence {
    SymbolSequence::constant(1, 0).unwrap()
}

fn full_product(t0: &AnglePoint, depth: usize) -> CodedProduct {
    let tau = rotation_code_prefix(t0, &angle(), depth).unwrap();
    CodedProduct::new(3, 2, tau, const_seq(), const_seq(), vec![vec![0, 1, 2]], vec![vec![0, 1]]).unwrap()
}

fn diagonal() -> Line {
    Line::rational(q(1, 1), q(0, 1)).unwrap()
}

#[test]
fn phi_examples() {
    let a = angle();
    let z = (q(1, 5), q(7, 10));
    assert_eq!(phi_t(&tq(q(1, 10)), &a, 3, 2, &z).unwrap(), (q(1, 5), q(2, 5)));
    assert_eq!(phi_t(&tq(q(1, 2)), &a, 3, 2, &z).unwrap(), (q(3, 5), q(2, 5)));
    for t in [q(0, 1), q(1, 2), q(9, 10)] {
        assert_eq!(phi_t(&tq(t), &a, 3, 2, &(q(0, 1), q(0, 1))).unwrap(), (q(0, 1), q(0, 1)));
    }
}

#[test]
fn u_map_examples() {
    let a = angle();
    let s = UState {
        z: (q(1, 5), q(7, 10)),
        t: tq(q(1, 2)),
        omega: SymbolSequence::periodic(2, vec![0, 1]).unwrap(),
        eta: SymbolSequence::periodic(3, vec![0, 1, 2]).unwrap(),
    };
    let s1 = u_map(&s, &a, 3, 2).unwrap();
    assert_eq!(s1.t, AnglePoint { a: q(-1, 2), b: 1 });
    assert!((s1.t.to_f64(&a) - 0.130930).abs() < 1e-6);
    assert_eq!((s1.omega.at(0), s1.eta.at(0)), (1, 1));
    let s2 = u_map(&s1, &a, 3, 2).unwrap();
    let cf = u_iterate_closed_form(&s.z, &s.t, &a, 3, 2, 2).unwrap();
    assert!(cf.equal && cf.closed == s2.z);
    let fixed = UState { z: (q(0, 1), q(0, 1)), ..s };
    assert_eq!(u_map(&fixed, &a, 3, 2).unwrap().z, (q(0, 1), q(0, 1)));
}

#[test]
fn closed_form_matches_iteration() {
    let a = angle();
    let z = (q(1, 7), q(1, 3));
    assert!(u_iterate_closed_form(&z, &tq(q(1, 5)), &a, 3, 2, 0).unwrap().closed == z);
    assert!(u_iterate_closed_form(&z, &tq(q(1, 5)), &a, 3, 2, 10).unwrap().equal);
    let r = u_iterate_closed_form(&z, &tq(q(1, 100)), &a, 3, 2, 1).unwrap();
    assert_eq!((r.r, r.closed.0.clone()), (0, q(1, 7)));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let den = rng.random_range(2..200);
        let z = (q(rng.random_range(0..den), den), q(rng.random_range(0..den), den));
        let t = tq(q(rng.random_range(0..1000), 1000));
        assert!(u_iterate_closed_form(&z, &t, &a, 3, 2, rng.random_range(0..=30)).unwrap().equal);
    }
}

fn w(v: &[(u32, u32)]) -> Vec<Pair> {
    v.to_vec()
}

#[test]
fn magnification() {
    let words: Vec<Vec<Pair>> = (0..2).flat_map(|a| (0..2).map(move |b| w(&[(a, 0), (b, 1)]))).collect();
    let mu = EmpiricalMeasure::uniform(2, words).unwrap();
    let (m1, x1) = magnify(&mu, &w(&[(1, 0), (0, 1)])).unwrap();
    assert_eq!(m1, EmpiricalMeasure::uniform(1, vec![w(&[(0, 1)]), w(&[(1, 1)])]).unwrap());
    assert_eq!(x1, w(&[(0, 1)]));
    let pm = EmpiricalMeasure::point_mass(w(&[(2, 0), (1, 1), (0, 0)]));
    let (m2, _) = magnify(&pm, &w(&[(2, 0), (1, 1), (0, 0)])).unwrap();
    assert_eq!(m2, EmpiricalMeasure::point_mass(w(&[(1, 1), (0, 0)])));
    let mu = EmpiricalMeasure::new(
        2,
        vec![(w(&[(0, 0), (0, 0)]), q(1, 2)), (w(&[(0, 0), (1, 0)]), q(1, 4)), (w(&[(0, 0), (2, 0)]), q(1, 4))],
    )
    .unwrap();
    let (m3, _) = magnify(&mu, &w(&[(0, 0)])).unwrap();
    assert_eq!(m3.mass(&w(&[(0, 0)])).unwrap(), q(1, 2));
    assert_eq!(m3.mass(&w(&[(2, 0)])).unwrap(), q(1, 4));
    assert_eq!(m3.total(), q(1, 1));
    assert!(matches!(magnify(&mu, &w(&[(1, 1)])), Err(CoreError::ZeroMass)));
    assert!(EmpiricalMeasure::new(1, vec![(w(&[(0, 0)]), q(1, 2))]).is_err());
}

#[test]
fn slice_preimages() {
    let t0 = AnglePoint::zero();
    let cp = full_product(&t0, 8);
    let far = Line::rational(q(1, 1), q(5, 1)).unwrap();
    assert!(slice_preimage(&cp, &far, 4, DEFAULT_NODE_BUDGET).unwrap().is_empty());
    let pre = slice_preimage(&cp, &diagonal(), 4, DEFAULT_NODE_BUDGET).unwrap();
    let kind = PartitionKind::Adaptive { m1: 3, m2: 2, tau: cp.tau.clone() };
    let cells = count_line_cells(&cp, &diagonal(), kind.at(4).unwrap(), DEFAULT_NODE_BUDGET).unwrap();
    let (a, b) = (pre.len() as u64, cells.count_upper);
    assert!(a <= 4 * b && b <= 4 * a, "{} {}", a, b);
    let single = CodedProduct::new(3, 2, cp.tau.clone(), const_seq(), const_seq(), vec![vec![2]], vec![vec![1]]).unwrap();
    // The product is the single point (1, 1) when τ has ones; the line y = x passes through it.
    for d in 1..6 {
        assert_eq!(slice_preimage(&single, &diagonal(), d, DEFAULT_NODE_BUDGET).unwrap().len(), 1);
    }
}

fn chain_for(n_k: usize) -> CpChain {
    let t0 = AnglePoint::zero();
    let cp = full_product(&t0, n_k + 2);
    let e = slice_preimage(&cp, &diagonal(), n_k + 2, DEFAULT_NODE_BUDGET).unwrap();
    build_cp_chain(&e, n_k, &t0, &angle(), &const_seq(), &const_seq(), 0).unwrap()
}

#[test]
fn chain_structure() {
    let a = angle();
    let c = chain_for(6);
    assert_eq!(c.mu_k.total(), q(1, 1));
    assert_eq!(c.p_k.total(), q(1, 1));
    assert_eq!(c.q_k.total(), q(1, 1));
    assert_eq!(c.q_k.atoms.len(), 6 * c.representatives.len());
    assert!(c.q_k.coding_consistent(&a, 2).unwrap());
    for d in [&c.p_k, &c.q_k] {
        for l in 0..4 {
            assert_eq!(adaptedness_residual(d, l).unwrap(), q(0, 1));
        }
    }
    // One M̂ step on an atom agrees with magnify on its materialised pair.
    let (s0, _) = &c.p_k.atoms[3];
    let next = m_hat(&c.p_k, &a).unwrap();
    let (s1, _) = &next.atoms[3];
    let (mu1, x1) = magnify(&c.p_k.measure_of(s0).unwrap(), s0.point()).unwrap();
    assert_eq!(next.measure_of(s1).unwrap(), mu1);
    assert_eq!(s1.point(), &x1[..]);
    assert_eq!(s1.t, s0.t.rotate(&a).unwrap());
    assert_eq!(s1.omega_shift, s0.tau[0] as u64);
}

#[test]
fn chain_entropy() {
    let c = chain_for(10);
    let h = entropy_h(&c.q_k, 2).unwrap();
    assert!((h - 1.0).abs() <= 0.15, "{}", h);
    let a = angle();
    let t0 = AnglePoint::zero();
    let single = CodedProduct::new(3, 2, rotation_code_prefix(&t0, &a, 8).unwrap(), const_seq(), const_seq(), vec![vec![2]], vec![vec![1]]).unwrap();
    let e = slice_preimage(&single, &diagonal(), 8, DEFAULT_NODE_BUDGET).unwrap();
    let c1 = build_cp_chain(&e, 6, &t0, &a, &const_seq(), &const_seq(), 0).unwrap();
    assert_eq!(entropy_h(&c1.q_k, 2).unwrap(), 0.0);
}

fn single_atom(mu: EmpiricalMeasure, word: Vec<Pair>) -> ChainDistribution {
    ChainDistribution {
        measures: vec![mu],
        atoms: vec![(
            MicroState {
                measure: 0,
                word: Arc::from(word),
                level: 0,
                t: AnglePoint::zero(),
                tau: Arc::from(vec![0u8; 4]),
                omega_shift: 0,
                eta_shift: 0,
            },
            q(1, 1),
        )],
        omega: const_seq(),
        eta: const_seq(),
        provenance: (0, 1),
    }
}

#[test]
fn entropy_and_adaptedness_of_hand_built_chains() {
    let x = w(&[(0, 1), (0, 0)]);
    let uniform = EmpiricalMeasure::uniform(2, vec![w(&[(0, 0), (0, 0)]), x.clone()]).unwrap();
    let d = single_atom(uniform, x.clone());
    assert!((entropy_h(&d, 2).unwrap() - 1.0).abs() < 1e-15);
    assert!(adaptedness_residual(&d, 2).unwrap() > q(0, 1));
    assert_eq!(adaptedness_residual(&d, 0).unwrap(), q(0, 1));
    let pm = single_atom(EmpiricalMeasure::point_mass(x.clone()), x);
    assert_eq!(entropy_h(&pm, 2).unwrap(), 0.0);
    assert_eq!(adaptedness_residual(&pm, 2).unwrap(), q(0, 1));
}

#[test]
fn t_marginal_equidistributes() {
    let a = angle();
    let d1 = t_marginal_discrepancy(&AnglePoint::zero(), &a, 100);
    let d2 = t_marginal_discrepancy(&AnglePoint::zero(), &a, 10_000);
    assert!(d2 < d1 && d2 <= 0.05);
}

#[test]
fn genericity_of_bernoulli_sequences() {
    let a = angle();
    let om = make_sequence(&SequenceSpec::Bernoulli { probabilities: vec![q(1, 2), q(1, 2)], seed: 5 }).unwrap();
    let et = make_sequence(&SequenceSpec::Bernoulli { probabilities: vec![q(1, 3), q(2, 3)], seed: 6 }).unwrap();
    let t = tq(q(1, 7));
    let n = 100_000;
    let r = z_orbit_genericity(&t, &a, &om, &et, &[0.5, 0.5], &[1.0 / 3.0, 2.0 / 3.0], n).unwrap();
    assert!(r.max_deviation <= 0.02, "{:?}", r);
    let disc = star_discrepancy(&mut orbit_f64(&t, &a, n));
    assert!(r.t_deviation <= 2.0 * disc);
    let zero = SymbolSequence::constant(2, 0).unwrap();
    let r = z_orbit_genericity(&t, &a, &zero, &et, &[0.5, 0.5], &[1.0 / 3.0, 2.0 / 3.0], 1000).unwrap();
    assert!((r.omega_deviation - 0.5).abs() < 1e-12);
}
