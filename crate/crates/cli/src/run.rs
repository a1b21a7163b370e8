use std::path::PathBuf;

use carpetslice_core::carpets::{bound_intersection, bound_slice_star, dims, is_incommensurable, Carpet};
use carpetslice_core::dynamics::{
    adaptedness_residual, build_cp_chain, entropy_h, slice_preimage, t_marginal_discrepancy,
};
use carpetslice_core::measures::{entropy_dim_from_samples, gap_hypothesis, tv_curve, GapHypothesis, SINGULARITY_NOTE};
use carpetslice_core::numeric::{to_f64, DimExpr, Q};
use carpetslice_core::rotation::{rotation_code_prefix, theta_of, AnglePoint, RemainderScan};
use carpetslice_core::slicer::{
    boxdim_estimate, cover_inclusion, intersect_cover_count, verdict_from_counts, PartitionKind, DEFAULT_NODE_BUDGET,
};
use carpetslice_core::symbolic::CodedProduct;
use carpetslice_core::CoreError;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{dec, expr_json, rat_json, write_json, Csv};
use crate::parallel;
use crate::spec::{fmt_rat, BoundDef, CarpetDef, ExperimentSpec, Kind, MeasureDef, NamedMeasure, Projection, SpecError};

/// Settings that come from the command line rather than the spec.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub budget: u64,
    /// Bits of the certified enclosures printed in reports.
    pub precision: u32,
    /// Overrides the spec's seed when set.
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out_dir: PathBuf::from("."), budget: DEFAULT_NODE_BUDGET, precision: 128, seed: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Observation or report with no verdict attached.
    Info,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Info => 0,
            Status::Fail => 1,
        }
    }

    fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn label(self) -> Value {
        match self {
            Status::Pass => json!("PASS"),
            Status::Fail => json!("FAIL"),
            Status::Info => Value::Null,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub artifacts: Vec<PathBuf>,
    pub report: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    /// Node budget, precision or sample-size limits; partial results, if
    /// any, were written to the report file.
    #[error("resource limit: {source}")]
    Resource { source: CoreError, report: Option<PathBuf> },
    #[error(transparent)]
    Core(CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for resource or precision limits, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Resource { .. } => 2,
            _ => 3,
        }
    }
}

fn is_resource(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::BudgetExhausted { .. }
            | CoreError::PrecisionExhausted { .. }
            | CoreError::WindowTooDeep { .. }
            | CoreError::Overflow(_)
    )
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        if is_resource(&e) {
            RunError::Resource { source: e, report: None }
        } else {
            RunError::Core(e)
        }
    }
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    opts: &'a RunOptions,
    seed: u64,
    stem: String,
}

impl Ctx<'_> {
    fn path(&self, ext: &str) -> PathBuf {
        self.opts.out_dir.join(format!("{}.{}", self.stem, ext))
    }

    fn csv(&self, columns: &[&str]) -> Csv {
        Csv::new(self.spec.kind, self.seed, columns)
    }

    fn header(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("schema_version".into(), json!(crate::spec::SCHEMA_VERSION));
        m.insert("kind".into(), json!(self.spec.kind.name()));
        m.insert("seed".into(), json!(self.seed));
        m
    }

    fn finish(&self, status: Status, mut report: serde_json::Map<String, Value>, csv: Option<Csv>) -> Result<RunOutcome, RunError> {
        report.insert("verdict".into(), status.label());
        let report = Value::Object(report);
        let mut artifacts = vec![write_json(&self.path("json"), &report)?];
        if let Some(c) = csv {
            artifacts.push(c.write(&self.path("csv"))?);
        }
        Ok(RunOutcome { status, artifacts, report })
    }

    /// Write what is known so far and turn a resource error into a
    /// [`RunError::Resource`] pointing at it.
    fn fail_with_partial(&self, e: CoreError, mut partial: serde_json::Map<String, Value>) -> RunError {
        if !is_resource(&e) {
            return RunError::Core(e);
        }
        partial.insert("error".into(), json!(e.to_string()));
        if let CoreError::BudgetExhausted { partial_lower, .. } = &e {
            partial.insert("partial_lower".into(), json!(partial_lower));
        }
        partial.insert("verdict".into(), Value::Null);
        let path = self.path("json");
        match write_json(&path, &Value::Object(partial)) {
            Ok(p) => RunError::Resource { source: e, report: Some(p) },
            Err(io) => RunError::Io(io),
        }
    }
}

fn carpet(def: &Option<CarpetDef>) -> Result<Carpet, RunError> {
    Ok(def.as_ref().expect("validated spec has a carpet").build()?)
}

fn carpet_json(def: &Option<CarpetDef>) -> Value {
    serde_json::to_value(def.as_ref().unwrap()).unwrap()
}

fn uniform() -> MeasureDef {
    MeasureDef::Named(NamedMeasure::Uniform)
}

/// Largest digit depth whose denominators fit comfortably in 64 bits.
fn default_digit_depth(c: &Carpet) -> usize {
    let b = c.m().max(c.n()) as f64;
    ((60.0 / b.log2()).floor() as usize).max(1)
}

/// Run one experiment, writing `<stem>.json` and usually `<stem>.csv`
/// into the output directory. The stem is the spec's `output` field or
/// the kind name.
pub fn run(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let ctx = Ctx {
        spec,
        opts,
        seed: opts.seed.or(spec.seed).unwrap_or(0),
        stem: spec.output.clone().unwrap_or_else(|| spec.kind.name().to_string()),
    };
    match spec.kind {
        Kind::Dims => run_dims(&ctx),
        Kind::Slice => run_slice(&ctx),
        Kind::Intersect => run_intersect(&ctx),
        Kind::Embed => run_embed(&ctx),
        Kind::Cpchain => run_cpchain(&ctx),
        Kind::RotationScan => run_rotation_scan(&ctx),
        Kind::Singularity => run_singularity(&ctx),
        Kind::Entropy => run_entropy(&ctx),
    }
}

fn run_dims(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let c = carpet(&ctx.spec.carpet)?;
    let d = dims(&c);
    let bits = ctx.opts.precision;
    let star = bound_slice_star(&c);
    let rows: [(&str, &DimExpr); 5] = [
        ("dim_box", &d.dim_box),
        ("dim_hausdorff", &d.dim_hausdorff),
        ("dim_p2", &d.dim_p2),
        ("dim_star", &d.dim_star),
        ("slice_bound_star", &star.value),
    ];
    let mut csv = ctx.csv(&["quantity", "expression", "exact", "decimal", "certified_error"]);
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&ctx.spec.carpet));
    r.insert("precision_bits".into(), json!(bits));
    for (name, e) in rows {
        let v = expr_json(e, bits);
        csv.row(&[
            name.to_string(),
            format!("\"{}\"", e),
            v["exact"].as_str().unwrap_or("").to_string(),
            v["decimal"].as_str().unwrap().to_string(),
            v["certified_error"].as_str().unwrap().to_string(),
        ]);
        r.insert(name.into(), v);
    }
    r.insert("ordering_holds".into(), json!(d.ordering_holds()));
    r.insert("warnings".into(), json!(star.warnings));
    ctx.finish(Status::Info, r, Some(csv))
}

fn bound_expr(c: &Carpet, b: &BoundDef) -> DimExpr {
    match b {
        BoundDef::Star => bound_slice_star(c).value,
        BoundDef::Value(q) => DimExpr::rational(q.clone()),
    }
}

fn run_slice(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let c = carpet(&s.carpet)?;
    let line = s.line.as_ref().unwrap().build()?;
    let kind = s.partition.as_ref().map(|p| p.kind()).unwrap_or(PartitionKind::Dyadic);
    let (k0, k1) = s.window.unwrap();
    let bound = bound_expr(&c, s.bound.as_ref().unwrap());
    let slack = s.slack.as_ref().unwrap();
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&s.carpet));
    r.insert("line".into(), serde_json::to_value(s.line.as_ref().unwrap()).unwrap());
    r.insert("window".into(), json!([k0, k1]));
    r.insert("bound".into(), expr_json(&bound, ctx.opts.precision));
    r.insert("slack".into(), rat_json(&slack.0));
    let mut csv = ctx.csv(&["k", "partition", "count_lower", "count_upper"]);
    let mut counts = Vec::new();
    let mut base = 2;
    for k in k0..=k1 {
        let p = kind.at(k)?;
        base = p.scale_base();
        let cc = match parallel::count_line_cells(&c, &line, p, ctx.opts.budget) {
            Ok(cc) => cc,
            Err(e) => {
                r.insert("counts".into(), counts_json(&counts));
                r.insert("failed_depth".into(), json!(k));
                return Err(ctx.fail_with_partial(e, r));
            }
        };
        csv.row(&[k.to_string(), cc.partition.descriptor(), cc.count_lower.to_string(), cc.count_upper.to_string()]);
        counts.push(cc);
    }
    r.insert("counts".into(), counts_json(&counts));
    let v = verdict_from_counts(counts, base, &bound, to_f64(&slack.0))?;
    r.insert("slope_lower".into(), json!(dec(v.slope.slope_lower)));
    r.insert("slope_upper".into(), json!(dec(v.slope.slope_upper)));
    r.insert("fit_residual".into(), json!(dec(v.slope.residual)));
    r.insert("bound_upper".into(), json!(dec(v.bound_value)));
    r.insert("rule".into(), json!("PASS iff slope_upper <= bound_upper + slack"));
    ctx.finish(Status::from_pass(v.pass), r, Some(csv))
}

fn counts_json(counts: &[carpetslice_core::slicer::CoverCount]) -> Value {
    Value::Array(
        counts
            .iter()
            .map(|c| json!({"k": c.k, "count_lower": c.count_lower, "count_upper": c.count_upper}))
            .collect(),
    )
}

fn run_intersect(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let (f, e) = (carpet(&s.carpet)?, carpet(&s.target)?);
    let g = s.map.as_ref().unwrap().build()?;
    let (k0, k1) = s.window.unwrap();
    let rows: Vec<_> = (k0..=k1)
        .into_par_iter()
        .map(|k| intersect_cover_count(&f, &g, &e, k))
        .collect::<Result<_, _>>()?;
    let mut csv = ctx.csv(&["k", "count_lower", "count_upper", "image_cells", "target_cells"]);
    for x in &rows {
        csv.row(&[
            x.count.k.to_string(),
            x.count.count_lower.to_string(),
            x.count.count_upper.to_string(),
            x.image_cells.to_string(),
            x.target_cells.to_string(),
        ]);
    }
    let bound = bound_intersection(&f, &e, g.orientation);
    let counts: Vec<_> = rows.iter().map(|x| x.count.clone()).collect();
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&s.carpet));
    r.insert("target".into(), carpet_json(&s.target));
    r.insert("map".into(), serde_json::to_value(s.map.as_ref().unwrap()).unwrap());
    r.insert("bound".into(), expr_json(&bound.value, ctx.opts.precision));
    r.insert("warnings".into(), json!(bound.warnings));
    r.insert("counts".into(), counts_json(&counts));
    r.insert(
        "slope_upper".into(),
        match boxdim_estimate(&counts, 2) {
            Ok(est) => json!(dec(est.slope_upper)),
            Err(_) => Value::Null,
        },
    );
    ctx.finish(Status::Info, r, Some(csv))
}

fn run_embed(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let (f, e) = (carpet(&s.carpet)?, carpet(&s.target)?);
    let g = s.map.as_ref().unwrap().build()?;
    let (k0, k1) = s.window.unwrap();
    let slack = s.slack_cells.unwrap_or(1);
    let rows: Vec<_> = (k0..=k1)
        .into_par_iter()
        .map(|k| cover_inclusion(&g, &f, &e, k, slack).map(|inc| (k, inc)))
        .collect::<Result<_, _>>()?;
    let mut csv = ctx.csv(&["k", "included", "rectangles_checked", "witness_x0", "witness_x1", "witness_y0", "witness_y1"]);
    let mut per_k = Vec::new();
    for (k, inc) in &rows {
        let w: Vec<String> = match &inc.witness {
            Some(r) => [&r.x0, &r.x1, &r.y0, &r.y1].iter().map(|q| fmt_rat(q)).collect(),
            None => vec![String::new(); 4],
        };
        let mut cells = vec![k.to_string(), inc.included.to_string(), inc.rectangles_checked.to_string()];
        cells.extend(w.iter().cloned());
        csv.row(&cells);
        per_k.push(json!({
            "k": k,
            "included": inc.included,
            "rectangles_checked": inc.rectangles_checked,
            "witness": inc.witness.as_ref().map(|_| w.clone()),
        }));
    }
    let all = rows.iter().all(|(_, inc)| inc.included);
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&s.carpet));
    r.insert("target".into(), carpet_json(&s.target));
    r.insert("map".into(), serde_json::to_value(s.map.as_ref().unwrap()).unwrap());
    r.insert("slack_cells".into(), json!(slack));
    r.insert("depths".into(), Value::Array(per_k));
    r.insert("note".into(), json!("finite-depth cover inclusion; not a proof of an embedding"));
    ctx.finish(Status::from_pass(all), r, Some(csv))
}

/// Levels of the adaptedness residual computed for each chain.
const RESIDUAL_LEVELS: usize = 3;

fn run_cpchain(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let p = s.product.as_ref().unwrap();
    let line = s.line.as_ref().unwrap().build()?;
    let angle = theta_of(p.m1, p.m2)?;
    let t0 = AnglePoint::rational(&angle, p.t0.0.clone())?;
    let omega = p.omega.build(p.gammas.len() as u32)?;
    let eta = p.eta.build(p.lambdas.len() as u32)?;
    let budget = ctx.opts.budget;
    let rows: Vec<_> = s
        .depths
        .as_ref()
        .unwrap()
        .par_iter()
        .map(|&n_k| -> carpetslice_core::Result<_> {
            let d = n_k + 2;
            let tau = rotation_code_prefix(&t0, &angle, d)?;
            let cp = CodedProduct::new(p.m1, p.m2, tau, omega.clone(), eta.clone(), p.gammas.clone(), p.lambdas.clone())?;
            let e = slice_preimage(&cp, &line, d, budget)?;
            let chain = build_cp_chain(&e, n_k, &t0, &angle, &omega, &eta, 0)?;
            let h = entropy_h(&chain.q_k, p.m2)?;
            let mut res_p = Q::from_integer(0.into());
            let mut res_q = Q::from_integer(0.into());
            for l in 0..=RESIDUAL_LEVELS {
                res_p = res_p.max(adaptedness_residual(&chain.p_k, l)?);
                res_q = res_q.max(adaptedness_residual(&chain.q_k, l)?);
            }
            let consistent = chain.q_k.coding_consistent(&angle, 2)?;
            Ok((n_k, e.len(), chain.q_k.atoms.len(), h, res_p, res_q, consistent))
        })
        .collect::<Result<_, _>>()?;
    let horizon = s.horizon.unwrap_or(10_000);
    let disc = t_marginal_discrepancy(&t0, &angle, horizon as usize);
    let mut csv = ctx.csv(&["n_k", "preimage_words", "atoms", "entropy_h", "residual_p", "residual_q", "coding_consistent"]);
    let mut per = Vec::new();
    for (n_k, words, atoms, h, rp, rq, ok) in &rows {
        csv.row(&[n_k.to_string(), words.to_string(), atoms.to_string(), dec(*h), fmt_rat(rp), fmt_rat(rq), ok.to_string()]);
        per.push(json!({"n_k": n_k, "entropy_h": dec(*h), "residual_p": fmt_rat(rp), "residual_q": fmt_rat(rq), "coding_consistent": ok}));
    }
    let zero = Q::from_integer(0.into());
    let structural = rows.iter().all(|r| r.4 == zero && r.5 == zero && r.6);
    let last_h = rows.iter().max_by_key(|r| r.0).map(|r| r.3).unwrap();
    let in_range = s
        .expect
        .as_ref()
        .map(|(lo, hi)| to_f64(&lo.0) <= last_h && last_h <= to_f64(&hi.0))
        .unwrap_or(true);
    let mut r = ctx.header();
    r.insert("product".into(), serde_json::to_value(p).unwrap());
    r.insert("line".into(), serde_json::to_value(s.line.as_ref().unwrap()).unwrap());
    r.insert("chains".into(), Value::Array(per));
    r.insert("t_marginal_discrepancy".into(), json!({"horizon": horizon, "value": dec(disc)}));
    r.insert("expect".into(), s.expect.as_ref().map(|(a, b)| json!([fmt_rat(&a.0), fmt_rat(&b.0)])).unwrap_or(Value::Null));
    r.insert("rule".into(), json!("PASS iff every residual is 0, coding is consistent, and H at the largest n_k lies in expect"));
    ctx.finish(Status::from_pass(structural && in_range), r, Some(csv))
}

fn run_rotation_scan(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let (m1, m2) = s.bases.unwrap();
    let angle = theta_of(m1, m2)?;
    let (big_k, g) = (s.horizon.unwrap(), s.grid_points.unwrap());
    if g == 0 {
        return Err(RunError::Core(CoreError::InvalidArgument("grid_points must be positive".into())));
    }
    let grid: Vec<Q> = (0..g).map(|i| Q::new(i.into(), g.into())).collect();
    let lines = parallel::remainder_scan(&angle, big_k, &grid)?;
    let mut acc = RemainderScan::empty();
    let mut csv = ctx.csv(&["t", "max_remainder", "argmax_k", "carry_identity_holds"]);
    for (t, l) in grid.iter().zip(&lines) {
        acc.absorb(t, l, big_k);
        csv.row(&[fmt_rat(t), dec(l.max_remainder), l.argmax_k.to_string(), l.carry_identity_holds.to_string()]);
    }
    let pass = acc.max_remainder < 2.0 && acc.carry_identity_holds;
    let mut r = ctx.header();
    r.insert("bases".into(), json!([m1, m2]));
    r.insert("horizon".into(), json!(big_k));
    r.insert("grid_points".into(), json!(g));
    r.insert("max_remainder".into(), json!(dec(acc.max_remainder)));
    r.insert("argmax_t".into(), json!(fmt_rat(&acc.argmax_t)));
    r.insert("argmax_k".into(), json!(acc.argmax_k));
    r.insert("carry_identity_holds".into(), json!(acc.carry_identity_holds));
    r.insert("exact_fallbacks".into(), json!(acc.exact_fallbacks));
    r.insert("rule".into(), json!("PASS iff max_remainder < 2 and the carry identity holds at every point"));
    ctx.finish(Status::from_pass(pass), r, Some(csv))
}

/// Seed of the second measure in a two-measure experiment.
fn partner_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

fn run_singularity(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let (f, e) = (carpet(&s.carpet)?, carpet(&s.target)?);
    let g = s.map.as_ref().unwrap().build()?;
    let (sa, sb) = (ctx.seed, partner_seed(ctx.seed));
    let mu = s.measure.clone().unwrap_or_else(uniform).build(&f, sa)?;
    let nu = s.target_measure.clone().unwrap_or_else(uniform).build(&e, sb)?;
    let n = s.samples.unwrap();
    let depth = s.digit_depth.unwrap_or_else(|| default_digit_depth(&f).min(default_digit_depth(&e)));
    let a = parallel::sample_self_affine(&f, &mu, n, depth)?;
    let b = parallel::sample_self_affine(&e, &nu, n, depth)?;
    let curve = tv_curve(&a, &g, &b, s.window.unwrap())?;
    let mut csv = ctx.csv(&["k", "tv", "cells"]);
    for p in &curve {
        csv.row(&[p.k.to_string(), dec(p.tv), p.cells.to_string()]);
    }
    let hyp = match gap_hypothesis(&f, &mu, &e, &nu, g.orientation) {
        GapHypothesis::Holds { kappa, bound } => json!({"status": "holds", "kappa": dec(kappa), "bound": dec(bound)}),
        GapHypothesis::Fails { kappa, bound } => json!({"status": "fails", "kappa": dec(kappa), "bound": dec(bound)}),
        GapHypothesis::NotChecked(why) => json!({"status": "not checked", "reason": why}),
    };
    let inc = is_incommensurable(&f, &e);
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&s.carpet));
    r.insert("target".into(), carpet_json(&s.target));
    r.insert("map".into(), serde_json::to_value(s.map.as_ref().unwrap()).unwrap());
    r.insert("samples".into(), json!(n));
    r.insert("digit_depth".into(), json!(depth));
    r.insert("seeds".into(), json!([sa, sb]));
    r.insert("incommensurable".into(), json!(inc.incommensurable));
    r.insert("gap_hypothesis".into(), hyp);
    r.insert("curve".into(), json!(curve.iter().map(|p| json!({"k": p.k, "tv": dec(p.tv), "cells": p.cells})).collect::<Vec<_>>()));
    r.insert("note".into(), json!(SINGULARITY_NOTE));
    ctx.finish(Status::Info, r, Some(csv))
}

fn run_entropy(ctx: &Ctx) -> Result<RunOutcome, RunError> {
    let s = ctx.spec;
    let c = carpet(&s.carpet)?;
    let mu = s.measure.clone().unwrap_or_else(uniform).build(&c, ctx.seed)?;
    let n = s.samples.unwrap();
    let depth = s.digit_depth.unwrap_or_else(|| default_digit_depth(&c));
    let base = s.base.unwrap_or(2);
    let proj = s.projection.unwrap_or(Projection::Xy);
    let pts = parallel::sample_self_affine(&c, &mu, n, depth)?;
    let pts = match proj {
        Projection::Xy => pts,
        Projection::X => pts.x_marginal(),
        Projection::Y => pts.y_marginal(),
    };
    let mut r = ctx.header();
    r.insert("carpet".into(), carpet_json(&s.carpet));
    r.insert("samples".into(), json!(n));
    r.insert("digit_depth".into(), json!(depth));
    r.insert("base".into(), json!(base));
    r.insert("projection".into(), serde_json::to_value(proj).unwrap());
    let est = match entropy_dim_from_samples(&pts, base, s.window.unwrap()) {
        Ok(e) => e,
        Err(e) => return Err(ctx.fail_with_partial(e, r)),
    };
    let mut csv = ctx.csv(&["k", "entropy_nats"]);
    for (k, h) in &est.entropies {
        csv.row(&[k.to_string(), dec(*h)]);
    }
    r.insert("slope".into(), json!(dec(est.slope)));
    r.insert("intercept".into(), json!(dec(est.intercept)));
    r.insert("fit_residual".into(), json!(dec(est.residual)));
    let status = match &s.expect {
        Some((lo, hi)) => {
            r.insert("expect".into(), json!([fmt_rat(&lo.0), fmt_rat(&hi.0)]));
            Status::from_pass(to_f64(&lo.0) <= est.slope && est.slope <= to_f64(&hi.0))
        }
        None => Status::Info,
    };
    ctx.finish(status, r, Some(csv))
}
