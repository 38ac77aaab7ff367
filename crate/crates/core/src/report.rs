//! Canonical JSON output.
//!
//! Every non-integer number is written with 17 significant digits, so the
//! text round-trips to the same `f64` and identical inputs give byte-identical
//! output.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("finite float");
            let text = format!("{x:.16e}");
            Value::Number(text.parse::<Number>().expect("formatted float parses"))
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Serializes `value` as pretty-printed canonical JSON.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = canonicalize(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)?)
}
