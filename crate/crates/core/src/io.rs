//! JSON formats. States are 1-based; rationals are `"p/q"` strings and
//! floats are plain numbers.
//!
//! ```text
//! matrix:    {"n": 2, "mode": "rational", "rows": [["1/2", "1/2"], ["1", "0"]]}
//! measure:   {"n": 2, "mode": "rational", "atoms": [{"map": "(12)", "weight": "1/2"}, ...]}
//! partition: [[1, 2], [3, 4, 5]]
//! functions: {"n": 3, "members": ["(111)", "(311)"]}
//! ```

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::coalescence::CoalescenceReport;
use crate::error::{Error, Result};
use crate::inverse::{ExplorerReport, FunctionSet};
use crate::matrix::TransitionMatrix;
use crate::measures::{FunctionMeasure, StateFunction};
use crate::partition::Partition;
use crate::scalar::{Mode, Rational, Scalar};

/// A matrix in whichever mode the input declared.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMatrix {
    Rational(TransitionMatrix<Rational>),
    Float(TransitionMatrix<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyMeasure {
    Rational(FunctionMeasure<Rational>),
    Float(FunctionMeasure<f64>),
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// `"p/q"`, an integer, or a finite decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if let Ok(r) = Rational::from_str(t) {
        if r.denom().is_zero() {
            return Err(parse_err(format!("zero denominator in {t:?}")));
        }
        return Ok(r);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').ok_or_else(|| parse_err(format!("not a rational: {t:?}")))?;
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return Err(parse_err(format!("not a rational: {t:?}")));
    }
    let digits = format!("{int}{frac}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|e| parse_err(e.to_string()))?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

pub fn scalar_to_json<T: Scalar>(x: &T) -> Value {
    match x.to_rational() {
        Some(r) => Value::String(r.to_string()),
        None => json!(x.to_f64()),
    }
}

fn entry_mode(v: &Value) -> Result<Mode> {
    match v {
        Value::String(_) => Ok(Mode::Rational),
        Value::Number(_) => Ok(Mode::Float),
        other => Err(parse_err(format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

fn rational_entry(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().expect("i64").into())),
        other => Err(parse_err(format!("rational mode expects \"p/q\" strings, got {other}"))),
    }
}

fn float_entry(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| parse_err("bad number")),
        Value::String(s) => parse_rational(s).map(|r| r.to_f64()),
        other => Err(parse_err(format!("expected a number, got {other}"))),
    }
}

/// The declared mode, or the mode implied by the first entry.
fn declared_mode(obj: &Map<String, Value>, first: Option<&Value>) -> Result<Mode> {
    match obj.get("mode") {
        Some(Value::String(s)) => match s.as_str() {
            "rational" | "exact" => Ok(Mode::Rational),
            "float" => Ok(Mode::Float),
            other => Err(parse_err(format!("unknown mode {other:?}"))),
        },
        Some(other) => Err(parse_err(format!("mode must be a string, got {other}"))),
        None => first.map(entry_mode).unwrap_or(Ok(Mode::Rational)),
    }
}

fn object(text: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(text).map_err(|e| parse_err(e.to_string()))? {
        Value::Object(m) => Ok(m),
        other => Err(parse_err(format!("expected a JSON object, got {other}"))),
    }
}

fn get_n(obj: &Map<String, Value>) -> Result<Option<usize>> {
    match obj.get("n") {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| parse_err(format!("n must be a non-negative integer, got {v}"))),
    }
}

pub fn matrix_to_json<T: Scalar>(p: &TransitionMatrix<T>) -> Value {
    json!({
        "n": p.n(),
        "mode": T::MODE.as_str(),
        "rows": p.rows().map(|r| r.iter().map(scalar_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn parse_matrix(text: &str) -> Result<AnyMatrix> {
    let obj = object(text)?;
    let rows = obj
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("matrix needs a \"rows\" array"))?;
    let rows: Vec<&Vec<Value>> = rows
        .iter()
        .map(|r| r.as_array().ok_or_else(|| parse_err("each row must be an array")))
        .collect::<Result<_>>()?;
    if let Some(n) = get_n(&obj)? {
        if n != rows.len() {
            return Err(Error::DimensionMismatch { left: n, right: rows.len() });
        }
    }
    let first = rows.first().and_then(|r| r.first());
    match declared_mode(&obj, first)? {
        Mode::Rational => {
            let rows = rows.iter().map(|r| r.iter().map(rational_entry).collect()).collect::<Result<_>>()?;
            Ok(AnyMatrix::Rational(TransitionMatrix::new(rows)?))
        }
        Mode::Float => {
            let rows = rows.iter().map(|r| r.iter().map(float_entry).collect()).collect::<Result<_>>()?;
            Ok(AnyMatrix::Float(TransitionMatrix::new(rows)?))
        }
    }
}

pub fn measure_to_json<T: Scalar>(mu: &FunctionMeasure<T>) -> Value {
    json!({
        "n": mu.n(),
        "mode": T::MODE.as_str(),
        "atoms": mu
            .atoms()
            .iter()
            .map(|(f, w)| json!({"map": f.to_string(), "weight": scalar_to_json(w)}))
            .collect::<Vec<_>>(),
    })
}

fn atom_parts(v: &Value) -> Result<(&str, &Value)> {
    let map = v.get("map").and_then(Value::as_str).ok_or_else(|| parse_err("atom needs a \"map\" string"))?;
    let weight = v.get("weight").ok_or_else(|| parse_err("atom needs a \"weight\""))?;
    Ok((map, weight))
}

pub fn parse_measure(text: &str) -> Result<AnyMeasure> {
    let obj = object(text)?;
    let atoms = obj
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("measure needs an \"atoms\" array"))?;
    let parsed: Vec<(&str, &Value)> = atoms.iter().map(atom_parts).collect::<Result<_>>()?;
    let n = match get_n(&obj)? {
        Some(n) => n,
        None => {
            let (map, _) = parsed.first().ok_or_else(|| parse_err("measure without atoms needs \"n\""))?;
            let inner = map.trim().trim_start_matches('(').trim_end_matches(')');
            if inner.contains(',') {
                inner.split(',').count()
            } else {
                inner.chars().count()
            }
        }
    };
    let fs: Vec<StateFunction> = parsed.iter().map(|(m, _)| StateFunction::parse(m, n)).collect::<Result<_>>()?;
    match declared_mode(&obj, parsed.first().map(|(_, w)| *w))? {
        Mode::Rational => {
            let ws: Vec<Rational> = parsed.iter().map(|(_, w)| rational_entry(w)).collect::<Result<_>>()?;
            Ok(AnyMeasure::Rational(FunctionMeasure::new(n, fs.into_iter().zip(ws).collect())?))
        }
        Mode::Float => {
            let ws: Vec<f64> = parsed.iter().map(|(_, w)| float_entry(w)).collect::<Result<_>>()?;
            Ok(AnyMeasure::Float(FunctionMeasure::new(n, fs.into_iter().zip(ws).collect())?))
        }
    }
}

pub fn partition_to_json(p: &Partition) -> Value {
    json!(p.to_one_based())
}

/// Blocks of 1-based states; `n` defaults to the total number of states.
pub fn parse_partition(text: &str, n: Option<usize>) -> Result<Partition> {
    let blocks: Vec<Vec<usize>> = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let n = n.unwrap_or_else(|| blocks.iter().map(Vec::len).sum());
    Partition::from_one_based(n, &blocks)
}

pub fn function_set_to_json(g: &FunctionSet) -> Value {
    json!({
        "n": g.n(),
        "members": g.members().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
    })
}

pub fn parse_function_set(text: &str) -> Result<FunctionSet> {
    let obj = object(text)?;
    let n = get_n(&obj)?.ok_or_else(|| parse_err("function set needs \"n\""))?;
    let members = obj
        .get("members")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("function set needs a \"members\" array"))?
        .iter()
        .map(|v| {
            let s = v.as_str().ok_or_else(|| parse_err("members are strings like \"(123)\""))?;
            StateFunction::parse(s, n)
        })
        .collect::<Result<_>>()?;
    FunctionSet::new(n, members)
}

pub fn coalescence_report_to_json(rep: &CoalescenceReport) -> Value {
    json!({
        "k": rep.k,
        "deterministic": rep.deterministic,
        "limit_partitions": rep.limit_partitions.iter().map(Partition::to_one_based).collect::<Vec<_>>(),
        "reachable_census": rep.reachable_census,
        "block_sizes": rep.block_size_multisets(),
        "block_sizes_agree": rep.block_sizes_agree(),
    })
}

pub fn explorer_report_to_json(rep: &ExplorerReport) -> Value {
    let witnesses: Map<String, Value> = rep
        .witnesses
        .iter()
        .map(|(k, mu)| (k.to_string(), measure_to_json(mu)))
        .collect();
    json!({
        "K": rep.k_values,
        "witnesses": witnesses,
        "coverage": rep.coverage.to_string(),
        "evaluated": rep.evaluated,
        "realizable": rep.realizable,
    })
}
