//! CSV and JSON artifacts.
//!
//! CSV files start with `#` comment lines recording the schema version,
//! the experiment kind and the seed, followed by a header row. Values are
//! exact rationals where the quantity is exact; otherwise a decimal with a
//! certified error column, or a plain decimal for empirical statistics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use carpetslice_core::numeric::{parse_rational, to_f64, DimExpr, Q};
use num_traits::Signed;
use serde_json::{json, Value};

use crate::spec::{fmt_rat, Kind, SCHEMA_VERSION};

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(kind: Kind, seed: u64, columns: &[&str]) -> Csv {
        let mut text = String::new();
        writeln!(text, "# carpetslice schema_version={} kind={}", SCHEMA_VERSION, kind.name()).unwrap();
        writeln!(text, "# seed={}", seed).unwrap();
        writeln!(text, "{}", columns.join(",")).unwrap();
        Csv { text, columns: columns.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> std::io::Result<PathBuf> {
        std::fs::write(path, &self.text)?;
        Ok(path.to_path_buf())
    }
}

/// Shortest-form decimal for an empirical statistic.
pub fn dec(x: f64) -> String {
    format!("{}", x)
}

/// Decimal approximation of an interval's midpoint together with an upper
/// bound on its distance to every point of the interval.
pub fn certified_decimal(e: &DimExpr, bits: u32) -> (String, String) {
    let iv = e.enclosure(bits);
    let text = format!("{:.17e}", iv.mid_f64());
    let approx = parse_decimal(&text);
    let a = (&approx - &iv.lo).abs();
    let b = (&iv.hi - &approx).abs();
    let err = if a > b { a } else { b };
    (text, round_up(&err))
}

fn parse_decimal(s: &str) -> Q {
    let (mant, exp) = s.split_once('e').expect("scientific notation");
    let m = parse_rational(mant).expect("mantissa parses");
    let e: i32 = exp.parse().expect("exponent parses");
    let ten = Q::from_integer(10.into());
    if e >= 0 {
        m * num_traits::pow(ten, e as usize)
    } else {
        m / num_traits::pow(ten, (-e) as usize)
    }
}

/// A short decimal string whose value is at least `x`.
fn round_up(x: &Q) -> String {
    if *x == Q::from_integer(0.into()) {
        return "0".into();
    }
    let mut f = to_f64(x) * (1.0 + 1e-6) + f64::MIN_POSITIVE;
    loop {
        let s = format!("{:.2e}", f);
        if parse_decimal(&s) >= *x {
            return s;
        }
        f *= 1.01;
    }
}

/// JSON record for a dimension-type expression.
pub fn expr_json(e: &DimExpr, bits: u32) -> Value {
    let (decimal, err) = certified_decimal(e, bits);
    json!({
        "expr": e.to_string(),
        "exact": e.exact_rational().map(|q| fmt_rat(&q)),
        "decimal": decimal,
        "certified_error": err,
    })
}

pub fn rat_json(q: &Q) -> Value {
    Value::String(fmt_rat(q))
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(v).expect("JSON serialises");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(path.to_path_buf())
}
