use carpetslice_core::carpets::{AffinePlaneMap, Carpet, Orientation};
use carpetslice_core::measures::*;
use carpetslice_core::numeric::{q, Q};
use carpetslice_core::symbolic::{make_sequence, SequenceSpec, SymbolSequence};
use carpetslice_core::CoreError;

fn carpet_f() -> Carpet {
    Carpet::new(3, 2, [(0, 0), (0, 1), (2, 0)]).unwrap()
}

fn cantor_carpet() -> Carpet {
    Carpet::new(3, 2, [(0, 0), (2, 0), (0, 1), (2, 1)]).unwrap()
}

/// `|count − N p| ≤ 4 sqrt(N p (1 − p))`.
fn within_band(count: u64, n: u64, p: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= 4.0 * sd + 1e-9
}

#[test]
fn point_mass_samples_sit_at_the_origin() {
    let c = carpet_f();
    let spec = BernoulliSpec::point_mass(&c, (0, 0), 5).unwrap();
    let s = sample_self_affine(&c, &spec, 1000, 12).unwrap();
    assert_eq!(s.len(), 1000);
    assert!(s.coords.iter().all(|p| *p == [0, 0]));
    assert_eq!(s.exact(17), (Q::from_integer(0.into()), Q::from_integer(0.into())));
}

#[test]
fn spec_validation() {
    let c = carpet_f();
    assert!(BernoulliSpec::new(&c, vec![(1, 0)], vec![q(1, 1)], 0).is_err());
    assert!(BernoulliSpec::new(&c, vec![(0, 0), (2, 0)], vec![q(1, 2), q(1, 3)], 0).is_err());
    assert!(BernoulliSpec::new(&c, vec![(0, 0), (2, 0)], vec![q(1, 1), q(0, 1)], 0).is_err());
    assert!(BernoulliSpec::new(&c, vec![(0, 0), (0, 0)], vec![q(1, 2), q(1, 2)], 0).is_err());
    let s = BernoulliSpec::new(&c, vec![(0, 0), (2, 0), (0, 1)], vec![q(1, 2), q(1, 4), q(1, 4)], 0).unwrap();
    assert_eq!(s.row_marginal()[&0], q(3, 4));
    assert_eq!(s.column_marginal()[&0], q(3, 4));
}

#[test]
fn uniform_square_is_uniform_on_dyadic_cells() {
    let c = Carpet::full(3, 2).unwrap();
    let spec = BernoulliSpec::uniform(&c, 2024).unwrap();
    let n = 100_000;
    let s = sample_self_affine(&c, &spec, n, 20).unwrap();
    let h = GridHistogram::from_samples(&s, 2, 3).unwrap();
    assert_eq!(h.occupied(), 64);
    for (cell, count) in h.counts() {
        assert!(within_band(count, n, 1.0 / 64.0), "cell {:?} has {}", cell, count);
    }
}

#[test]
fn truncated_samples_are_close_to_the_attractor() {
    let c = carpet_f();
    let spec = BernoulliSpec::uniform(&c, 3).unwrap();
    let d = 9;
    let s = sample_self_affine(&c, &spec, 500, d).unwrap();
    let (m, n) = (3i64, 2i64);
    // Append the digit (2, 0) forever: an exact attractor point.
    let tail_x = q(2, m - 1) / Q::from_integer(3i64.pow(d as u32).into());
    let bound = Q::from_integer(1.into()) / Q::from_integer(n.pow(d as u32).into());
    for i in 0..s.len() {
        let (x, y) = s.exact(i);
        let (ax, ay) = (&x + &tail_x, y.clone());
        assert!(&ax - &x <= bound && &ay - &y <= bound);
        assert!(x < Q::from_integer(1.into()) && y < Q::from_integer(1.into()));
    }
}

#[test]
fn sampling_is_chunk_deterministic() {
    let c = carpet_f();
    let spec = BernoulliSpec::uniform(&c, 77).unwrap();
    let n = 3 * SAMPLE_CHUNK + 5;
    let s = sample_self_affine(&c, &spec, n, 10).unwrap();
    let mut parts: Vec<(u64, Vec<[u128; 2]>)> =
        chunk_plan(n).into_iter().rev().map(|(ci, cnt)| (ci, sample_chunk(&c, &spec, ci, cnt, 10))).collect();
    parts.sort_by_key(|p| p.0);
    let rebuilt = Samples::from_chunks(2, s.den, parts.into_iter().map(|p| p.1).collect());
    assert_eq!(rebuilt, s);
    assert_eq!(sample_self_affine(&c, &spec, n, 10).unwrap(), s);
    assert_ne!(sample_self_affine(&c, &spec.with_seed(78), n, 10).unwrap(), s);
}

#[test]
fn histograms_conserve_and_merge() {
    let c = Carpet::full(3, 2).unwrap();
    let spec = BernoulliSpec::uniform(&c, 9).unwrap();
    let s = sample_self_affine(&c, &spec, 20_000, 16).unwrap();
    let h = GridHistogram::from_samples(&s, 3, 5).unwrap();
    for k in 0..=5 {
        let hk = h.coarsen(k).unwrap();
        assert_eq!(hk.counts().iter().map(|x| x.1).sum::<u64>(), 20_000);
        assert_eq!(hk, GridHistogram::from_samples(&s, 3, k).unwrap());
    }
    let (a, b) = s.coords.split_at(7_000);
    let ha = GridHistogram::from_samples(&Samples { coords: a.to_vec(), ..s.clone() }, 3, 5).unwrap();
    let hb = GridHistogram::from_samples(&Samples { coords: b.to_vec(), ..s.clone() }, 3, 5).unwrap();
    assert_eq!(ha.merge(&hb).unwrap(), h);
    // Cell coordinates decode to the direct floor computation.
    let direct: std::collections::BTreeMap<[u128; 2], u64> = s.coords.iter().fold(Default::default(), |mut acc, p| {
        let cell = [p[0] * 243 / s.den[0], p[1] * 243 / s.den[1]];
        *acc.entry(cell).or_insert(0) += 1;
        acc
    });
    assert_eq!(h.counts().into_iter().collect::<std::collections::BTreeMap<_, _>>(), direct);
}

#[test]
fn fiber_sampler_examples() {
    let f = carpet_f();
    let spec = BernoulliSpec::uniform(&f, 11).unwrap();
    let zeros = SymbolSequence::constant(2, 0).unwrap();
    let n = 40_000;
    let s = conditional_fiber_sampler(&f, &spec, &zeros, 12).unwrap().sample(n).unwrap();
    let h = GridHistogram::from_samples(&s, 3, 2).unwrap();
    let counts = h.counts();
    assert_eq!(counts.iter().map(|c| c.0[0]).collect::<Vec<_>>(), vec![0, 2, 6, 8]);
    for (_, c) in counts {
        assert!(within_band(c, n, 0.25));
    }

    let ones = SymbolSequence::constant(2, 1).unwrap();
    let s = conditional_fiber_sampler(&f, &spec, &ones, 12).unwrap().sample(100).unwrap();
    assert!(s.coords.iter().all(|p| p[0] == 0));

    // One support digit per row: every sample is the same point.
    let g = Carpet::new(3, 2, [(0, 0), (2, 0), (1, 1)]).unwrap();
    let single = BernoulliSpec::new(&g, vec![(2, 0), (1, 1)], vec![q(1, 2), q(1, 2)], 4).unwrap();
    let omega = SymbolSequence::periodic(2, vec![0, 1, 1]).unwrap();
    let s = conditional_fiber_sampler(&g, &single, &omega, 10).unwrap().sample(200).unwrap();
    assert!(s.coords.iter().all(|p| *p == s.coords[0]));

    let row0 = BernoulliSpec::new(&f, vec![(0, 0), (2, 0)], vec![q(1, 2), q(1, 2)], 0).unwrap();
    let err = conditional_fiber_sampler(&f, &row0, &omega, 10).unwrap_err();
    assert_eq!(err, CoreError::ZeroProbabilityRow { row: 1, position: 1 });
}

#[test]
fn fiber_marginals_average_to_the_x_marginal() {
    let f = carpet_f();
    let spec = BernoulliSpec::new(&f, vec![(0, 0), (2, 0), (0, 1)], vec![q(1, 2), q(1, 6), q(1, 3)], 21).unwrap();
    let rows: Vec<Q> = spec.row_marginal().values().cloned().collect();
    let n = 20_000u64;
    let depth = 8;
    let mut pooled = Vec::with_capacity(n as usize);
    let mut den = 0;
    for i in 0..n {
        let omega = make_sequence(&SequenceSpec::Bernoulli { probabilities: rows.clone(), seed: 1_000 + i }).unwrap();
        let s = conditional_fiber_sampler(&f, &spec.with_seed(i), &omega, depth).unwrap().sample(1).unwrap();
        den = s.den[0];
        pooled.push(s.coords[0]);
    }
    let pooled = Samples { dim: 1, den: [den, 1], coords: pooled };
    let full = sample_self_affine(&f, &spec, n, depth).unwrap().x_marginal();
    let hp = GridHistogram::from_samples(&pooled, 3, 2).unwrap();
    let hf = GridHistogram::from_samples(&full, 3, 2).unwrap();
    // Exact x-marginal digit law: 0 w.p. 5/6, 2 w.p. 1/6.
    let px = |d: u128| if d == 0 { 5.0 / 6.0 } else if d == 2 { 1.0 / 6.0 } else { 0.0 };
    let cf: std::collections::BTreeMap<u128, u64> = hf.counts().into_iter().map(|(c, k)| (c[0], k)).collect();
    let cp: std::collections::BTreeMap<u128, u64> = hp.counts().into_iter().map(|(c, k)| (c[0], k)).collect();
    for cell in 0..9u128 {
        let p = px(cell / 3) * px(cell % 3);
        let a = *cp.get(&cell).unwrap_or(&0);
        let b = *cf.get(&cell).unwrap_or(&0);
        assert!(within_band(a, n, p), "pooled cell {} has {}", cell, a);
        assert!(within_band(b, n, p), "direct cell {} has {}", cell, b);
        // Two independent multinomials: the difference has variance 2Np(1−p).
        let sd = (2.0 * n as f64 * p * (1.0 - p)).sqrt();
        assert!((a as f64 - b as f64).abs() <= 4.0 * sd + 1e-9);
    }
}

#[test]
fn entropy_dimension_of_point_mass_is_zero() {
    let c = carpet_f();
    let spec = BernoulliSpec::point_mass(&c, (0, 1), 1).unwrap();
    let s = sample_self_affine(&c, &spec, 1_000, 12).unwrap();
    let e = entropy_dim_from_samples(&s, 2, (1, 3)).unwrap();
    assert_eq!(e.slope, 0.0);
    assert!(matches!(entropy_dim_from_samples(&s, 2, (1, 5)), Err(CoreError::WindowTooDeep { .. })));
    assert!(entropy_dim_from_samples(&s, 2, (1, 2)).is_err());
}

#[test]
fn entropy_dimension_calibration() {
    let full = Carpet::full(3, 2).unwrap();
    let s = sample_self_affine(&full, &BernoulliSpec::uniform(&full, 1).unwrap(), 1_000_000, 20).unwrap();
    let e = entropy_dim_from_samples(&s, 2, (1, 8)).unwrap();
    assert!((1.9..=2.05).contains(&e.slope), "uniform slope {}", e.slope);

    let cantor = cantor_carpet();
    let s = sample_self_affine(&cantor, &BernoulliSpec::uniform(&cantor, 2).unwrap(), 1_000_000, 20).unwrap();
    let x = s.x_marginal();
    let target = 2f64.ln() / 3f64.ln();
    let dy = entropy_dim_from_samples(&x, 2, (4, 14)).unwrap();
    assert!((dy.slope - target).abs() <= 0.05, "dyadic Cantor slope {}", dy.slope);
    let tri = entropy_dim_from_samples(&x, 3, (1, 10)).unwrap();
    assert!((tri.slope - target).abs() <= 0.01, "triadic Cantor slope {}", tri.slope);
}

#[test]
fn entropy_dimension_is_additive_on_products() {
    let c = cantor_carpet();
    let s = sample_self_affine(&c, &BernoulliSpec::uniform(&c, 8).unwrap(), 1 << 18, 20).unwrap();
    let w = (1, 6);
    let joint = entropy_dim_from_samples(&s, 2, w).unwrap().slope;
    let x = entropy_dim_from_samples(&s.x_marginal(), 2, w).unwrap().slope;
    let y = entropy_dim_from_samples(&s.y_marginal(), 2, w).unwrap().slope;
    assert!((joint - (x + y)).abs() <= 0.05, "{} vs {} + {}", joint, x, y);
}

#[test]
fn restricted_entropy_uniform_and_point_mass() {
    let full = Carpet::full(3, 2).unwrap();
    let s = sample_self_affine(&full, &BernoulliSpec::uniform(&full, 5).unwrap(), 400_000, 20).unwrap();
    let h = GridHistogram::from_samples(&s, 2, 6).unwrap();
    let delta = q(1, 8);
    let eps = sup_ball_mass(&h, &delta, 6).unwrap();
    // A ball is 16 × 16 cells of 64 × 64, mass near 1/16.
    assert!((carpetslice_core::numeric::to_f64(&eps) - 1.0 / 16.0).abs() < 0.005);
    let r = restricted_entropy_check(&h, &delta, &eps, 6, DEFAULT_C1).unwrap();
    assert!(r.pass);
    assert!(r.lhs - r.rhs > 1.0);
    let expected = (4096.0f64).ln() + (15.0f64 / 16.0).ln();
    assert!((r.lhs - expected).abs() < 0.05, "lhs {} vs {}", r.lhs, expected);

    let pm = sample_self_affine(&full, &BernoulliSpec::point_mass(&full, (1, 1), 0).unwrap(), 1_000, 10).unwrap();
    let hp = GridHistogram::from_samples(&pm, 2, 6).unwrap();
    assert!(matches!(restricted_entropy_check(&hp, &delta, &q(1, 2), 6, DEFAULT_C1), Err(CoreError::Precondition(_))));
    assert!(restricted_entropy_check(&h, &q(1, 100), &eps, 6, DEFAULT_C1).is_err());
}

#[test]
fn restricted_entropy_passes_on_carpet_samples() {
    let f = carpet_f();
    let delta = q(1, 8);
    for seed in 0..20 {
        let s = sample_self_affine(&f, &BernoulliSpec::uniform(&f, seed).unwrap(), 20_000, 16).unwrap();
        let h = GridHistogram::from_samples(&s, 2, 5).unwrap();
        let eps = sup_ball_mass(&h, &delta, 5).unwrap();
        let r = restricted_entropy_check(&h, &delta, &eps, 5, DEFAULT_C1).unwrap();
        assert!(r.pass, "seed {}: lhs {} rhs {}", seed, r.lhs, r.rhs);
    }
}

#[test]
fn tv_curves() {
    let full = Carpet::full(3, 2).unwrap();
    let n = 200_000u64;
    let a = sample_self_affine(&full, &BernoulliSpec::uniform(&full, 1).unwrap(), n, 20).unwrap();
    let b = sample_self_affine(&full, &BernoulliSpec::uniform(&full, 2).unwrap(), n, 20).unwrap();
    for p in tv_curve(&a, &AffinePlaneMap::identity(), &b, (1, 6)).unwrap() {
        assert!(p.tv <= (p.cells as f64 / n as f64).sqrt(), "k={} tv={}", p.k, p.tv);
    }

    let half = AffinePlaneMap::new(Orientation::Diagonal, q(1, 2), q(1, 1), q(0, 1), q(0, 1)).unwrap();
    let right = Carpet::new(4, 2, [(2, 0), (3, 0), (2, 1), (3, 1)]).unwrap();
    let c = sample_self_affine(&right, &BernoulliSpec::uniform(&right, 3).unwrap(), 50_000, 20).unwrap();
    for p in tv_curve(&a, &half, &c, (1, 6)).unwrap() {
        assert_eq!(p.tv, 1.0, "k={}", p.k);
    }
}

#[test]
fn tv_curve_respects_antidiagonal_maps() {
    let full = Carpet::full(3, 2).unwrap();
    let a = sample_self_affine(&full, &BernoulliSpec::uniform(&full, 4).unwrap(), 5_000, 12).unwrap();
    let swapped = Samples { coords: a.coords.iter().map(|p| [p[1], p[0]]).collect(), den: [a.den[1], a.den[0]], ..a.clone() };
    let curve = tv_curve(&a, &AffinePlaneMap::swap(), &swapped, (1, 8)).unwrap();
    assert!(curve.iter().all(|p| p.tv == 0.0));
}

#[test]
fn singularity_observation_carries_no_verdict() {
    let f = carpet_f();
    let e = Carpet::new(7, 5, [(0, 0), (3, 0), (6, 0), (1, 2), (5, 2), (2, 4), (4, 4)]).unwrap();
    let mu = BernoulliSpec::uniform(&f, 1).unwrap();
    let nu = BernoulliSpec::uniform(&e, 2).unwrap();
    let obs = singularity_experiment(&f, &mu, &AffinePlaneMap::identity(), &e, &nu, (1, 6), 20_000, 16).unwrap();
    assert_eq!(obs.curve.len(), 6);
    assert_eq!(obs.note, SINGULARITY_NOTE);
    assert!(obs.curve.iter().all(|p| (0.0..=1.0).contains(&p.tv)));
    // F has fibers of sizes 2 and 1, so no closed form is used.
    assert!(matches!(obs.hypothesis, GapHypothesis::NotChecked(_)));

    // Commensurable exponents: reported, not checked.
    let f2 = Carpet::new(4, 2, [(0, 0), (1, 1)]).unwrap();
    let g = gap_hypothesis(&f2, &BernoulliSpec::uniform(&f2, 0).unwrap(), &carpet_f(), &mu, Orientation::Diagonal);
    assert!(matches!(g, GapHypothesis::NotChecked(_)));
}

#[test]
fn gap_hypothesis_with_equal_fibers() {
    // Full carpets: κ = 2, bound = 1 + 1 = 2, so the strict gap fails.
    let a = Carpet::full(3, 2).unwrap();
    let b = Carpet::full(7, 5).unwrap();
    let g = gap_hypothesis(&a, &BernoulliSpec::uniform(&a, 0).unwrap(), &b, &BernoulliSpec::uniform(&b, 0).unwrap(), Orientation::Diagonal);
    assert!(matches!(g, GapHypothesis::Fails { .. }), "{:?}", g);
    // Two-point fibers: the bound is log 2 / log 5 while κ = 1 + log 2 / log 3.
    let c = Carpet::new(3, 2, [(0, 0), (2, 0), (1, 1), (2, 1)]).unwrap();
    let d = Carpet::new(7, 5, [(0, 0), (6, 0), (3, 4), (5, 4)]).unwrap();
    let g = gap_hypothesis(&c, &BernoulliSpec::uniform(&c, 0).unwrap(), &d, &BernoulliSpec::uniform(&d, 0).unwrap(), Orientation::Diagonal);
    match g {
        GapHypothesis::Holds { kappa, bound } => assert!(kappa > bound),
        other => panic!("{:?}", other),
    }
}

#[test]
fn visit_densities() {
    assert_eq!(density_of_visits(|_| true, 1_000).unwrap(), (1.0, 1.0));
    let n = 10_001;
    let (lo, hi) = density_of_visits(|i| i % 2 == 0, n).unwrap();
    assert!((lo - 0.5).abs() <= 1.0 / n as f64 && (hi - 0.5).abs() <= 1.0 / n as f64);
    let theta = 2f64.ln() / 3f64.ln();
    let (lo, hi) = density_of_visits(|i| (i as f64 * theta).fract() < 0.3, 100_000).unwrap();
    assert!(lo <= hi && (lo - 0.3).abs() < 0.01 && (hi - 0.3).abs() < 0.01);
    assert!(density_of_visits(|_| true, 0).is_err());
}

#[test]
fn visited_angles_cover_at_least_the_density() {
    let theta = 2f64.ln() / 3f64.ln();
    let n = 40_000u64;
    let bins = (n as f64).sqrt() as usize;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 * theta).fract()).collect();
    let preds: Vec<Box<dyn Fn(u64) -> bool>> = vec![
        Box::new(|i| i % 3 == 0),
        Box::new(move |i| (i as f64 * theta).fract() < 0.3),
        Box::new(move |i| { let x = (i as f64 * theta).fract(); (0.2..0.25).contains(&x) || x > 0.9 }),
        Box::new(|i| i.count_ones() % 2 == 0),
    ];
    for p in &preds {
        let (d, _) = density_of_visits(p, n).unwrap();
        let visited: Vec<f64> = (0..n).filter(|&i| p(i)).map(|i| xs[i as usize]).collect();
        let cover = covered_measure(&visited, bins);
        assert!(cover >= d - 0.05, "cover {} density {}", cover, d);
    }
}
