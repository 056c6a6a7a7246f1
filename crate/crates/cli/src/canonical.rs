//! Canonical JSON: object keys sorted at every level, so equal values always
//! print to identical bytes.

use serde::Serialize;
use serde_json::{Map, Value};

fn sorted(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sorted(v))).collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    sorted(serde_json::to_value(v).expect("response types serialize"))
}

/// Compact canonical form, used by the HTTP service.
pub fn to_string<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(&to_value(v)).expect("values serialize")
}

/// Indented canonical form, used by the command line.
pub fn to_string_pretty<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(&to_value(v)).expect("values serialize")
}
