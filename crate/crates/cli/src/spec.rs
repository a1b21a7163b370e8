//! Experiment specification files.
//!
//! A spec is a JSON object with a `kind` and the fields that kind needs.
//! Field values are validated while deserialising, so malformed input is
//! reported with the line and column where it was found. Rationals are
//! written as strings (`"2/3"`, `"0.15"`) or integers and are kept exact.

use std::fmt;
use std::path::{Path, PathBuf};

use carpetslice_core::carpets::{AffinePlaneMap, Carpet, Orientation};
use carpetslice_core::measures::BernoulliSpec;
use carpetslice_core::numeric::{parse_rational, Q};
use carpetslice_core::slicer::{Line, PartitionKind};
use carpetslice_core::symbolic::{make_sequence, SequenceSpec, SymbolSequence};
use num_traits::One;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse { path: PathBuf, line: usize, column: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

/// An exact rational that (de)serialises as a string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Q);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(&self.0))
    }
}

pub fn fmt_rat(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an exact rational such as \"2/3\", \"0.15\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                parse_rational(v).map(Rat).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat(Q::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(Q::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rat, E> {
                Err(E::custom(format!("bare float {} is not exact; quote it as a string", v)))
            }
        }
        d.deserialize_any(V)
    }
}

/// Carpet definition: bases and digit set. Digits are sorted on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCarpet", into = "RawCarpet")]
pub struct CarpetDef {
    pub m: u64,
    pub n: u64,
    pub digits: Vec<[u32; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCarpet {
    m: u64,
    n: u64,
    digits: Vec<[u32; 2]>,
}

impl TryFrom<RawCarpet> for CarpetDef {
    type Error = String;
    fn try_from(r: RawCarpet) -> Result<Self, String> {
        for d in &r.digits {
            if d[0] as u64 >= r.m || d[1] as u64 >= r.n {
                return Err(format!("digit pair [{}, {}] out of range for m={}, n={}", d[0], d[1], r.m, r.n));
            }
        }
        let mut digits = r.digits.clone();
        digits.sort();
        if digits.windows(2).any(|w| w[0] == w[1]) {
            return Err("repeated digit pair".into());
        }
        let def = CarpetDef { m: r.m, n: r.n, digits };
        def.build().map_err(|e| e.to_string())?;
        Ok(def)
    }
}

impl From<CarpetDef> for RawCarpet {
    fn from(c: CarpetDef) -> Self {
        RawCarpet { m: c.m, n: c.n, digits: c.digits }
    }
}

impl CarpetDef {
    pub fn build(&self) -> carpetslice_core::Result<Carpet> {
        Carpet::new(self.m, self.n, self.digits.iter().map(|d| (d[0], d[1])))
    }

    pub fn from_carpet(c: &Carpet) -> Self {
        CarpetDef { m: c.m(), n: c.n(), digits: c.digits().iter().map(|&(i, j)| [i, j]).collect() }
    }
}

/// A carpet given inline or by a path relative to the spec file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CarpetFields", into = "CarpetFields")]
enum CarpetRef {
    File(String),
    Inline(CarpetDef),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CarpetFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    digits: Option<Vec<[u32; 2]>>,
}

impl TryFrom<CarpetFields> for CarpetRef {
    type Error = String;
    fn try_from(f: CarpetFields) -> Result<Self, String> {
        match f {
            CarpetFields { file: Some(file), m: None, n: None, digits: None } => Ok(CarpetRef::File(file)),
            CarpetFields { file: None, m: Some(m), n: Some(n), digits: Some(digits) } => {
                CarpetDef::try_from(RawCarpet { m, n, digits }).map(CarpetRef::Inline)
            }
            _ => Err("a carpet is either {\"file\": PATH} or {\"m\", \"n\", \"digits\"}".into()),
        }
    }
}

impl From<CarpetRef> for CarpetFields {
    fn from(c: CarpetRef) -> Self {
        match c {
            CarpetRef::File(file) => CarpetFields { file: Some(file), m: None, n: None, digits: None },
            CarpetRef::Inline(d) => CarpetFields { file: None, m: Some(d.m), n: Some(d.n), digits: Some(d.digits) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDef {
    pub slope: Rat,
    pub intercept: Rat,
}

impl LineDef {
    pub fn build(&self) -> carpetslice_core::Result<Line> {
        Line::rational(self.slope.0.clone(), self.intercept.0.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationDef {
    Diagonal,
    Antidiagonal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDef {
    pub orientation: OrientationDef,
    pub a: Rat,
    pub d: Rat,
    pub tx: Rat,
    pub ty: Rat,
}

impl MapDef {
    pub fn build(&self) -> carpetslice_core::Result<AffinePlaneMap> {
        let o = match self.orientation {
            OrientationDef::Diagonal => Orientation::Diagonal,
            OrientationDef::Antidiagonal => Orientation::Antidiagonal,
        };
        AffinePlaneMap::new(o, self.a.0.clone(), self.d.0.clone(), self.tx.0.clone(), self.ty.0.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PartitionDef {
    Dyadic,
    BaseGrid { base: u64 },
}

impl PartitionDef {
    pub fn kind(&self) -> PartitionKind {
        match self {
            PartitionDef::Dyadic => PartitionKind::Dyadic,
            PartitionDef::BaseGrid { base } => PartitionKind::BaseGrid(*base),
        }
    }
}

/// The bound a slice experiment is checked against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundDef {
    /// `max{dim*(F) − 1, 0}`.
    Star,
    Value(Q),
}

impl Serialize for BoundDef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BoundDef::Star => s.serialize_str("star"),
            BoundDef::Value(q) => s.serialize_str(&fmt_rat(q)),
        }
    }
}

impl<'de> Deserialize<'de> for BoundDef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.as_str() == Some("star") {
            return Ok(BoundDef::Star);
        }
        Rat::deserialize(v).map(|r| BoundDef::Value(r.0)).map_err(de::Error::custom)
    }
}

/// A Bernoulli digit measure: `"uniform"` or explicit weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureDef {
    Named(NamedMeasure),
    Weights { support: Vec<[u32; 2]>, probabilities: Vec<Rat> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedMeasure {
    Uniform,
}

impl MeasureDef {
    pub fn build(&self, c: &Carpet, seed: u64) -> carpetslice_core::Result<BernoulliSpec> {
        match self {
            MeasureDef::Named(NamedMeasure::Uniform) => BernoulliSpec::uniform(c, seed),
            MeasureDef::Weights { support, probabilities } => BernoulliSpec::new(
                c,
                support.iter().map(|p| (p[0], p[1])).collect(),
                probabilities.iter().map(|r| r.0.clone()).collect(),
                seed,
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceDef {
    Constant(u32),
    Periodic(Vec<u32>),
    Bernoulli { probabilities: Vec<Rat>, seed: u64 },
}

impl SequenceDef {
    pub fn build(&self, alphabet: u32) -> carpetslice_core::Result<SymbolSequence> {
        let spec = match self {
            SequenceDef::Constant(s) => SequenceSpec::Constant { alphabet, symbol: *s },
            SequenceDef::Periodic(p) => SequenceSpec::Periodic { alphabet, prefix: vec![], period: p.clone() },
            SequenceDef::Bernoulli { probabilities, seed } => SequenceSpec::Bernoulli {
                probabilities: probabilities.iter().map(|r| r.0.clone()).collect(),
                seed: *seed,
            },
        };
        make_sequence(&spec)
    }
}

/// Coded product `F̃_ω × Ẽ_η`; the coding sequence is `v_{t0}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDef {
    pub m1: u64,
    pub m2: u64,
    pub gammas: Vec<Vec<u32>>,
    pub lambdas: Vec<Vec<u32>>,
    pub omega: SequenceDef,
    pub eta: SequenceDef,
    pub t0: Rat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    Xy,
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Dims,
    Slice,
    Intersect,
    Embed,
    Cpchain,
    RotationScan,
    Singularity,
    Entropy,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Dims => "dims",
            Kind::Slice => "slice",
            Kind::Intersect => "intersect",
            Kind::Embed => "embed",
            Kind::Cpchain => "cpchain",
            Kind::RotationScan => "rotation-scan",
            Kind::Singularity => "singularity",
            Kind::Entropy => "entropy",
        }
    }
}

/// A validated experiment. Only the fields its kind uses are set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub kind: Kind,
    pub carpet: Option<CarpetDef>,
    pub target: Option<CarpetDef>,
    pub product: Option<ProductDef>,
    pub line: Option<LineDef>,
    pub map: Option<MapDef>,
    pub partition: Option<PartitionDef>,
    pub window: Option<(u32, u32)>,
    pub depths: Option<Vec<usize>>,
    pub bound: Option<BoundDef>,
    pub slack: Option<Rat>,
    pub slack_cells: Option<u32>,
    pub measure: Option<MeasureDef>,
    pub target_measure: Option<MeasureDef>,
    pub samples: Option<u64>,
    pub digit_depth: Option<usize>,
    pub base: Option<u64>,
    pub projection: Option<Projection>,
    pub expect: Option<(Rat, Rat)>,
    pub bases: Option<(u64, u64)>,
    pub horizon: Option<u64>,
    pub grid_points: Option<u64>,
    pub seed: Option<u64>,
    pub output: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    schema_version: u32,
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    carpet: Option<CarpetRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<CarpetRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    product: Option<ProductDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<LineDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    map: Option<MapDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<BoundDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slack: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slack_cells: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measure: Option<MeasureDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_measure: Option<MeasureDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    digit_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projection: Option<Projection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expect: Option<(Rat, Rat)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bases: Option<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_points: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<String>,
}

fn inline(r: Option<CarpetRef>) -> Result<Option<CarpetDef>, String> {
    match r {
        None => Ok(None),
        Some(CarpetRef::Inline(c)) => Ok(Some(c)),
        Some(CarpetRef::File(file)) => Err(format!("carpet file reference {:?} was not resolved", file)),
    }
}

impl TryFrom<RawSpec> for ExperimentSpec {
    type Error = String;
    fn try_from(r: RawSpec) -> Result<Self, String> {
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {} (expected {})", r.schema_version, SCHEMA_VERSION));
        }
        let spec = ExperimentSpec {
            schema_version: r.schema_version,
            kind: r.kind,
            carpet: inline(r.carpet)?,
            target: inline(r.target)?,
            product: r.product,
            line: r.line,
            map: r.map,
            partition: r.partition,
            window: r.window,
            depths: r.depths,
            bound: r.bound,
            slack: r.slack,
            slack_cells: r.slack_cells,
            measure: r.measure,
            target_measure: r.target_measure,
            samples: r.samples,
            digit_depth: r.digit_depth,
            base: r.base,
            projection: r.projection,
            expect: r.expect,
            bases: r.bases,
            horizon: r.horizon,
            grid_points: r.grid_points,
            seed: r.seed,
            output: r.output,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ExperimentSpec> for RawSpec {
    fn from(s: ExperimentSpec) -> Self {
        RawSpec {
            schema_version: s.schema_version,
            kind: s.kind,
            carpet: s.carpet.map(CarpetRef::Inline),
            target: s.target.map(CarpetRef::Inline),
            product: s.product,
            line: s.line,
            map: s.map,
            partition: s.partition,
            window: s.window,
            depths: s.depths,
            bound: s.bound,
            slack: s.slack,
            slack_cells: s.slack_cells,
            measure: s.measure,
            target_measure: s.target_measure,
            samples: s.samples,
            digit_depth: s.digit_depth,
            base: s.base,
            projection: s.projection,
            expect: s.expect,
            bases: s.bases,
            horizon: s.horizon,
            grid_points: s.grid_points,
            seed: s.seed,
            output: s.output,
        }
    }
}

fn need<T>(v: &Option<T>, field: &str, kind: Kind) -> Result<(), String> {
    match v {
        Some(_) => Ok(()),
        None => Err(format!("kind {} requires field `{}`", kind.name(), field)),
    }
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), String> {
        let k = self.kind;
        if let Some((a, b)) = self.window {
            if a > b {
                return Err(format!("depth window [{}, {}] is empty", a, b));
            }
        }
        if let Some(line) = &self.line {
            line.build().map_err(|e| e.to_string())?;
        }
        if let Some(map) = &self.map {
            map.build().map_err(|e| e.to_string())?;
        }
        if let Some(s) = &self.slack {
            if s.0 <= Q::from_integer(0.into()) {
                return Err("slack must be positive".into());
            }
        }
        if let Some(d) = &self.depths {
            if d.is_empty() || d.contains(&0) {
                return Err("depths must be a nonempty list of positive integers".into());
            }
        }
        if let Some((lo, hi)) = &self.expect {
            if lo.0 > hi.0 {
                return Err("expect range is empty".into());
            }
        }
        match k {
            Kind::Dims => need(&self.carpet, "carpet", k),
            Kind::Slice => {
                need(&self.carpet, "carpet", k)?;
                need(&self.line, "line", k)?;
                need(&self.window, "window", k)?;
                need(&self.bound, "bound", k)?;
                need(&self.slack, "slack", k)
            }
            Kind::Intersect => {
                need(&self.carpet, "carpet", k)?;
                need(&self.target, "target", k)?;
                need(&self.map, "map", k)?;
                need(&self.window, "window", k)
            }
            Kind::Embed => {
                need(&self.carpet, "carpet", k)?;
                need(&self.target, "target", k)?;
                need(&self.map, "map", k)?;
                need(&self.window, "window", k)
            }
            Kind::Cpchain => {
                need(&self.product, "product", k)?;
                need(&self.line, "line", k)?;
                need(&self.depths, "depths", k)
            }
            Kind::RotationScan => {
                need(&self.bases, "bases", k)?;
                need(&self.horizon, "horizon", k)?;
                need(&self.grid_points, "grid_points", k)
            }
            Kind::Singularity => {
                need(&self.carpet, "carpet", k)?;
                need(&self.target, "target", k)?;
                need(&self.map, "map", k)?;
                need(&self.window, "window", k)?;
                need(&self.samples, "samples", k)
            }
            Kind::Entropy => {
                need(&self.carpet, "carpet", k)?;
                need(&self.window, "window", k)?;
                need(&self.samples, "samples", k)
            }
        }
    }

    /// Normalised JSON text; parsing it gives back an equal spec.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    /// Parse spec text; carpet file references are resolved relative to
    /// the directory of `origin`.
    pub fn from_json_str(text: &str, origin: &Path) -> Result<ExperimentSpec, SpecError> {
        let mut raw: RawSpec = serde_json::from_str(text).map_err(|e| parse_error(origin, &e))?;
        let base = origin.parent().unwrap_or(Path::new("."));
        for slot in [&mut raw.carpet, &mut raw.target] {
            if let Some(CarpetRef::File(file)) = slot {
                let def = parse_carpet_file(&base.join(file.as_str()))?;
                *slot = Some(CarpetRef::Inline(def));
            }
        }
        ExperimentSpec::try_from(raw).map_err(|msg| SpecError::Invalid { path: origin.to_path_buf(), msg })
    }
}

fn parse_error(path: &Path, e: &serde_json::Error) -> SpecError {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    let msg = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
    SpecError::Parse { path: path.to_path_buf(), line: e.line(), column: e.column(), msg }
}

/// Read and validate a spec file.
pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.to_path_buf(), source })?;
    ExperimentSpec::from_json_str(&text, path)
}

/// Read a standalone carpet file.
pub fn parse_carpet_file(path: &Path) -> Result<CarpetDef, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, &e))
}

pub fn carpet_to_json(c: &CarpetDef) -> String {
    serde_json::to_string(c).expect("carpet serialises")
}
