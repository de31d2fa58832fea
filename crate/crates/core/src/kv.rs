//! Flat `key=value` text for configs and specs: one line per field, keys in
//! sorted order, strings bare, everything else JSON-encoded.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

fn object<T: Serialize>(v: &T) -> Map<String, Value> {
    match serde_json::to_value(v).expect("plain struct serializes") {
        Value::Object(m) => m,
        _ => unreachable!("kv types are structs"),
    }
}

pub fn to_pairs<T: Serialize>(v: &T) -> Vec<(String, String)> {
    // serde_json maps are ordered by key.
    object(v)
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            (k, s)
        })
        .collect()
}

pub fn to_text<T: Serialize>(v: &T) -> String {
    to_pairs(v).into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Starts from `base`, overrides the given keys, rejects unknown ones.
pub fn from_pairs<'a, T, E>(
    base: &T,
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    err: impl Fn(String) -> E,
) -> Result<T, E>
where
    T: Serialize + DeserializeOwned,
{
    let mut obj = object(base);
    let mut seen = std::collections::BTreeSet::new();
    for (k, raw) in pairs {
        let Some(slot) = obj.get_mut(k) else {
            return Err(err(format!("unknown key {k:?}")));
        };
        if !seen.insert(k.to_string()) {
            return Err(err(format!("duplicate key {k:?}")));
        }
        *slot = match slot {
            Value::String(_) => Value::String(raw.to_string()),
            _ => serde_json::from_str(raw).map_err(|e| err(format!("{k}: {e}")))?,
        };
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| err(e.to_string()))
}

/// Splits text into trimmed `(key, value)` pairs; `#` starts a comment line.
pub fn parse_lines<E>(text: &str, err: impl Fn(String) -> E) -> Result<Vec<(&str, &str)>, E> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key=value", n + 1)))?;
        out.push((k.trim(), v.trim()));
    }
    Ok(out)
}
