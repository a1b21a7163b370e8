//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! measured value and runtime; the test fails if any criterion fails.
//!
//! Run with `cargo test -p carpetslice --test acceptance -- --nocapture`.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use carpetslice::{parse_spec, run, RunOptions, RunOutcome, Status};
use carpetslice_core::carpets::{approx_square_count, dims, AffinePlaneMap, Carpet};
use carpetslice_core::dynamics::u_iterate_closed_form;
use carpetslice_core::numeric::{q, LogExpr};
use carpetslice_core::rotation::{rotation_code_prefix, theta_of, AnglePoint};
use carpetslice_core::slicer::{cell_bound_scan, cover_inclusion, fit_line};
use carpetslice_core::symbolic::{enumerate_cover, CodedProduct, SymbolSequence};
use carpetslice_core::DimExpr;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const F: &str = r#"{"m": 3, "n": 2, "digits": [[0, 0], [0, 1], [2, 0]]}"#;
const E: &str = r#"{"m": 5, "n": 3, "digits": [[0,0],[1,0],[2,0],[3,0],[4,0],[0,2],[1,2],[2,2],[3,2],[4,2],[1,1]]}"#;
const FULL: &str = r#"{"m": 3, "n": 2, "digits": [[0,0],[1,0],[2,0],[0,1],[1,1],[2,1]]}"#;
const SWAP: &str = r#"{"orientation": "antidiagonal", "a": "1", "d": "1", "tx": "0", "ty": "0"}"#;
const IDENTITY: &str = r#"{"orientation": "diagonal", "a": "1", "d": "1", "tx": "0", "ty": "0"}"#;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
    took: Duration,
    limit: Duration,
}

struct Suite {
    dir: TempDir,
    lines: Vec<Line>,
}

impl Suite {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("e.json"), E).unwrap();
        Suite { dir, lines: Vec::new() }
    }

    fn run_spec(&self, name: &str, text: &str) -> (RunOutcome, Value) {
        let p = self.dir.path().join(format!("{name}.spec.json"));
        fs::write(&p, text).unwrap();
        let spec = parse_spec(&p).unwrap();
        let opts = RunOptions { out_dir: self.dir.path().join("out"), ..RunOptions::default() };
        let out = run(&spec, &opts).unwrap();
        let r = serde_json::from_str(&fs::read_to_string(&out.artifacts[0]).unwrap()).unwrap();
        (out, r)
    }

    fn check(&mut self, id: &'static str, limit_secs: u64, f: impl FnOnce(&Suite) -> (bool, String)) {
        let t = Instant::now();
        let (pass, detail) = f(self);
        let took = t.elapsed();
        let limit = Duration::from_secs(limit_secs);
        let line = Line { id, pass: pass && took < limit, detail, took, limit };
        println!(
            "{} {}: {} [{:.2}s, limit {}s]",
            if line.pass { "PASS" } else { "FAIL" },
            line.id,
            line.detail,
            line.took.as_secs_f64(),
            line.limit.as_secs()
        );
        self.lines.push(line);
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn c1_star_dimension(s: &Suite) -> (bool, String) {
    let (out, r) = s.run_spec("c1", r#"{"schema_version": 1, "kind": "dims", "carpet": {"file": "e.json"}}"#);
    let e_exact = r["dim_star"]["exact"] == "2" && out.status.exit_code() == 0;
    let f = Carpet::new(3, 2, [(0, 0), (0, 1), (2, 0)]).unwrap();
    let star = dims(&f).dim_star;
    let closed = DimExpr::Log(LogExpr::log_of(2, 3).add_rational(&q(1, 1)));
    let width = star.enclosure(128).width_f64();
    let pass = e_exact && star.symbolically_equal(&closed) && width <= 1e-12;
    (pass, format!("dim*(E) exact = {}, dim*(F) = 1 + log2/log3 with enclosure width {:.1e}", r["dim_star"]["exact"], width))
}

fn c2_embedding(s: &Suite) -> (bool, String) {
    let text = format!(
        r#"{{"schema_version": 1, "kind": "embed", "carpet": {F}, "target": {{"file": "e.json"}},
            "map": {SWAP}, "window": [4, 8], "slack_cells": 1}}"#
    );
    let (out, _) = s.run_spec("c2", &text);
    let f = Carpet::new(3, 2, [(0, 0), (0, 1), (2, 0)]).unwrap();
    let mut d: Vec<(u32, u32)> = (0..5).map(|i| (i, 2)).collect();
    d.extend([(0, 0), (1, 1)]);
    let shrunk = Carpet::new(5, 3, d).unwrap();
    let control = cover_inclusion(&AffinePlaneMap::swap(), &f, &shrunk, 4, 1).unwrap();
    let pass = out.status == Status::Pass && !control.included && control.witness.is_some();
    (
        pass,
        format!(
            "swap(F) in cover of E for k=4..8: {:?}; control with Lambda_0={{0}} at k=4 included={} witness={}",
            out.status,
            control.included,
            control.witness.is_some()
        ),
    )
}

fn c3_box_dimension(_: &Suite) -> (bool, String) {
    let f = Carpet::new(3, 2, [(0, 0), (0, 1), (2, 0)]).unwrap();
    // The product-form count must agree with walking the cover tree.
    let walked = (1..=9).all(|k| {
        let steps = f.cover_schedule(k, f.matching_row_depth(k));
        let leaves = enumerate_cover(3, 2, &steps, &mut |_| true).unwrap();
        let distinct: std::collections::BTreeSet<_> = leaves.iter().map(|g| (g.ax, g.ay)).collect();
        approx_square_count(&f, k) == distinct.len().into()
    });
    let ln3 = 3f64.ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (10..=20).map(|k| (k as f64 * ln3, approx_square_count(&f, k).to_f64().unwrap().ln())).unzip();
    let (slope, _, _) = fit_line(&xs, &ys);
    let exact = 1.0 + (1.5f64).ln() / ln3;
    let pass = walked && (slope - exact).abs() <= 0.02;
    (pass, format!("slope {:.5} vs dim_box {:.5}; counts match the cover walk for k<=9: {}", slope, exact, walked))
}

fn c4_slice_bound(s: &Suite) -> (bool, String) {
    let spec = |carpet: &str, intercept: &str, bound: &str| {
        format!(
            r#"{{"schema_version": 1, "kind": "slice", "carpet": {carpet}, "line": {{"slope": "1", "intercept": "{intercept}"}},
                "window": [8, 14], "bound": "{bound}", "slack": "0.15"}}"#
        )
    };
    let (out, r) = s.run_spec("c4", &spec(F, "1/5", "star"));
    let nonempty = r["counts"].as_array().unwrap().iter().all(|c| c["count_upper"].as_u64().unwrap() > 0);
    let (ctrl, rc) = s.run_spec("c4n", &spec(FULL, "0", "1/2"));
    let pass = out.status == Status::Pass && nonempty && ctrl.status == Status::Fail && ctrl.status.exit_code() == 1;
    (
        pass,
        format!(
            "F, y=x+1/5: slope_upper {} vs bound {} + 0.15 -> {:?}; full square forced bound 1/2: slope_upper {} -> {:?}",
            r["slope_upper"], r["bound_upper"], out.status, rc["slope_upper"], ctrl.status
        ),
    )
}

fn c5_rotation(s: &Suite) -> (bool, String) {
    let text = r#"{"schema_version": 1, "kind": "rotation-scan", "bases": [3, 2], "horizon": 100000, "grid_points": 1000}"#;
    let (out, r) = s.run_spec("c5", text);
    (
        out.status == Status::Pass,
        format!("max remainder {} at t={} k={}, carry identity {}", r["max_remainder"], r["argmax_t"], r["argmax_k"], r["carry_identity_holds"]),
    )
}

fn c6_closed_form(_: &Suite) -> (bool, String) {
    let angle = theta_of(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut equal = 0;
    for _ in 0..1000 {
        let den = rng.random_range(2..1000i64);
        let z = (q(rng.random_range(0..den), den), q(rng.random_range(0..den), den));
        let tden = rng.random_range(2..1000i64);
        let t = AnglePoint::rational(&angle, q(rng.random_range(0..tden), tden)).unwrap();
        let k = rng.random_range(0..=30);
        if u_iterate_closed_form(&z, &t, &angle, 3, 2, k).unwrap().equal {
            equal += 1;
        }
    }
    (equal == 1000, format!("{equal}/1000 exact-equal"))
}

fn c7_cp_chain(s: &Suite) -> (bool, String) {
    let text = r#"{"schema_version": 1, "kind": "cpchain",
        "product": {"m1": 3, "m2": 2, "gammas": [[0, 1, 2]], "lambdas": [[0, 1]],
                    "omega": {"constant": 0}, "eta": {"constant": 0}, "t0": "0"},
        "line": {"slope": "1", "intercept": "0"}, "depths": [6, 8, 10, 12],
        "expect": ["0.85", "1.15"], "horizon": 10000}"#;
    let (out, r) = s.run_spec("c7", text);
    let disc: f64 = r["t_marginal_discrepancy"]["value"].as_str().unwrap().parse().unwrap();
    let chains = r["chains"].as_array().unwrap();
    let last = chains.iter().find(|c| c["n_k"] == 12).unwrap();
    let pass = out.status == Status::Pass && disc <= 0.05;
    (
        pass,
        format!(
            "H(Q_12) = {}, residuals zero in {} chains: {}, discrepancy {:.4}",
            last["entropy_h"],
            chains.len(),
            chains.iter().all(|c| c["residual_p"] == "0" && c["residual_q"] == "0"),
            disc
        ),
    )
}

fn c8_cell_bound(_: &Suite) -> (bool, String) {
    let angle = theta_of(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0;
    let mut cylinders = 0u64;
    for _ in 0..20 {
        let t = q(rng.random_range(0..10_000), 10_000);
        let tau = rotation_code_prefix(&AnglePoint::rational(&angle, t).unwrap(), &angle, 8).unwrap();
        let subset = |rng: &mut ChaCha8Rng, m: u32| -> Vec<u32> {
            loop {
                let s: Vec<u32> = (0..m).filter(|_| rng.random_bool(0.6)).collect();
                if !s.is_empty() {
                    return s;
                }
            }
        };
        let (n1, n2) = (rng.random_range(2..=3u32), rng.random_range(2..=3u32));
        let mut gammas: Vec<Vec<u32>> = (0..n1).map(|_| subset(&mut rng, 3)).collect();
        let mut lambdas: Vec<Vec<u32>> = (0..n2).map(|_| subset(&mut rng, 2)).collect();
        gammas[0] = vec![rng.random_range(0..3)];
        lambdas[0] = vec![rng.random_range(0..2)];
        let omega = SymbolSequence::periodic(n1, (0..5).map(|_| rng.random_range(0..n1)).collect()).unwrap();
        let eta = SymbolSequence::periodic(n2, (0..5).map(|_| rng.random_range(0..n2)).collect()).unwrap();
        let cp = CodedProduct::new(3, 2, tau, omega, eta, gammas, lambdas).unwrap();
        for k in 1..=8 {
            let scan = cell_bound_scan(&cp, k).unwrap();
            worst = worst.max(scan.max_cells);
            cylinders += scan.cylinders;
        }
    }
    (worst <= 10, format!("max cells met {worst} <= 10 over {cylinders} cylinders"))
}

fn c9_entropy(s: &Suite) -> (bool, String) {
    let uniform = format!(
        r#"{{"schema_version": 1, "kind": "entropy", "carpet": {FULL}, "samples": 1000000, "window": [1, 8],
            "base": 2, "seed": 9, "expect": ["1.9", "2.05"], "output": "c9u"}}"#
    );
    let (u, ru) = s.run_spec("c9u", &uniform);
    let cantor = r#"{"schema_version": 1, "kind": "entropy", "carpet": {"m": 3, "n": 2, "digits": [[0,0],[2,0],[0,1],[2,1]]},
        "samples": 1000000, "window": [4, 14], "base": 2, "projection": "x", "seed": 9, "output": "c9c"}"#;
    let (_, rc) = s.run_spec("c9c", cantor);
    let slope: f64 = rc["slope"].as_str().unwrap().parse().unwrap();
    let target = 2f64.ln() / 3f64.ln();
    let pass = u.status == Status::Pass && (slope - target).abs() <= 0.05;
    (pass, format!("uniform slope {} in [1.9, 2.05]; Cantor slope {:.4} vs {:.4}", ru["slope"], slope, target))
}

fn c10_singularity(s: &Suite) -> (bool, String) {
    let text = format!(
        r#"{{"schema_version": 1, "kind": "singularity", "carpet": {F},
            "target": {{"m": 7, "n": 5, "digits": [[0,0],[6,0],[3,4],[5,4]]}},
            "map": {IDENTITY}, "window": [1, 6], "samples": 200000, "seed": 10}}"#
    );
    let (out, r) = s.run_spec("c10", &text);
    let csv = fs::read_to_string(s.dir.path().join("out/singularity.csv")).unwrap();
    let points = r["curve"].as_array().unwrap().len();
    let pass = out.status == Status::Info && r["verdict"].is_null() && points == 6 && !csv.contains("PASS") && !csv.contains("FAIL");
    let last = &r["curve"][points - 1]["tv"];
    (pass, format!("TV curve emitted ({points} depths, TV at k=6 {last}) with no verdict; output dir {}", path_str(s.dir.path())))
}

#[test]
fn acceptance() {
    let mut s = Suite::new();
    s.check("C1 exact star dimension", 1, c1_star_dimension);
    s.check("C2 embedding counterexample", 60, c2_embedding);
    s.check("C3 box-dimension oracle", 30, c3_box_dimension);
    s.check("C4 one-sided slicing bound", 300, c4_slice_bound);
    s.check("C5 rotation remainder", 60, c5_rotation);
    s.check("C6 closed-form skew product", 10, c6_closed_form);
    s.check("C7 CP-chain diagnostics", 120, c7_cp_chain);
    s.check("C8 cylinder cell bound", 60, c8_cell_bound);
    s.check("C9 entropy-dimension calibration", 120, c9_entropy);
    s.check("C10 singularity observation", 120, c10_singularity);
    let failed: Vec<&str> = s.lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("{} of {} criteria passed", s.lines.len() - failed.len(), s.lines.len());
    assert!(failed.is_empty(), "failed: {failed:?}");
}
