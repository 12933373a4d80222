//! Flat serialisation of residual reports.
//!
//! Every report becomes an ordered list of `key -> scalar` pairs, written
//! either as a single JSON object or as two-column `key,value` CSV. Floats in
//! CSV carry 17 significant digits so a value read back is bit-identical.

use serde_json::{Map, Number, Value};

use crate::verify::{Phase, ResidualReport, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Float(Option<f64>),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Scalar {
    fn to_json(&self) -> Value {
        match self {
            Scalar::Float(Some(x)) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Scalar::Float(None) => Value::Null,
            Scalar::Int(n) => Value::from(*n),
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Text(s) => Value::String(s.clone()),
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Scalar::Float(Some(x)) => fmt_float(*x),
            Scalar::Float(None) => String::new(),
            Scalar::Int(n) => n.to_string(),
            Scalar::Bool(b) => b.to_string(),
            Scalar::Text(s) => csv_field(s),
        }
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Quote a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn push(out: &mut Vec<(String, Scalar)>, key: impl Into<String>, value: Scalar) {
    out.push((key.into(), value));
}

/// Ordered key-value view of a report.
pub fn flatten(report: &ResidualReport) -> Vec<(String, Scalar)> {
    let mut out = Vec::new();
    push(&mut out, "label", Scalar::Text(report.label.clone()));
    push(&mut out, "dimension", Scalar::Int(report.dimension as u64));
    push(&mut out, "metric_weight", Scalar::Float(Some(report.metric_weight)));
    if let Some(ts) = report.timestamp {
        push(&mut out, "timestamp", Scalar::Int(ts));
    }
    push(&mut out, "passed", Scalar::Bool(report.passed()));
    push(&mut out, "phase", Scalar::Text(report.phase.as_str().into()));
    match &report.phase {
        Phase::Broken { pairs } => push(&mut out, "phase.complex_pairs", Scalar::Int(*pairs as u64)),
        Phase::Indeterminate(reason) => push(&mut out, "phase.reason", Scalar::Text(reason.clone())),
        Phase::Unbroken => {}
    }
    push(&mut out, "max_imag_over_scale", Scalar::Float(report.max_imag_over_scale));
    for name in Tolerances::NAMES {
        push(&mut out, format!("tol.{name}"), Scalar::Float(report.tolerances.get(name)));
    }
    for (n, level) in report.levels.iter().enumerate() {
        push(&mut out, format!("level_{n}_re"), Scalar::Float(Some(level.energy.re)));
        push(&mut out, format!("level_{n}_im"), Scalar::Float(Some(level.energy.im)));
        let sig = level.signature.map_or(String::new(), |s| s.to_string());
        push(&mut out, format!("level_{n}_signature"), Scalar::Text(sig));
    }
    for e in &report.entries {
        push(&mut out, format!("{}.value", e.name), Scalar::Float(e.value));
        push(&mut out, format!("{}.tolerance", e.name), Scalar::Float(e.tolerance));
        push(&mut out, format!("{}.status", e.name), Scalar::Text(e.status.as_str().into()));
        if let Some(reason) = e.status.reason() {
            push(&mut out, format!("{}.reason", e.name), Scalar::Text(reason.into()));
        }
    }
    out
}

pub fn to_json(report: &ResidualReport) -> String {
    let map: Map<String, Value> = flatten(report)
        .into_iter()
        .map(|(k, v)| (k, v.to_json()))
        .collect();
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("flat map serialises");
    text.push('\n');
    text
}

pub fn to_csv(report: &ResidualReport) -> String {
    let mut text = String::from("key,value\n");
    for (k, v) in flatten(report) {
        text.push_str(&csv_field(&k));
        text.push(',');
        text.push_str(&v.to_csv());
        text.push('\n');
    }
    text
}
