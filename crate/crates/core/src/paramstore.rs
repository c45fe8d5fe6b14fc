//! Dotted-name access to serde parameter trees.

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Value;

use crate::{Error, Result};

/// Flatten every numeric leaf to (dotted.name, value), sorted by name.
pub fn flatten<T: Serialize>(params: &T) -> Vec<(String, f64)> {
    let v = Value::try_from(params).expect("parameter structs serialize");
    let mut out = Vec::new();
    walk("", &v, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, f64)>) {
    match v {
        Value::Table(t) => {
            for (k, x) in t {
                let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                walk(&name, x, out);
            }
        }
        Value::Array(a) => {
            for (k, x) in a.iter().enumerate() {
                walk(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Float(f) => out.push((prefix.to_string(), *f)),
        Value::Integer(i) => out.push((prefix.to_string(), *i as f64)),
        Value::Boolean(b) => out.push((prefix.to_string(), if *b { 1.0 } else { 0.0 })),
        _ => {}
    }
}

/// Apply dotted overrides; unknown keys and type mismatches are rejected.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(params: &T, overrides: &[(String, Value)]) -> Result<T> {
    let mut root = Value::try_from(params).map_err(|e| Error::Config(e.to_string()))?;
    for (key, val) in overrides {
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut root;
        for part in &parts {
            node = child(node, part, key)?;
        }
        let coerced = match (&*node, val) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(*i as f64),
            (Value::Float(_), Value::Float(_))
            | (Value::Integer(_), Value::Integer(_))
            | (Value::Boolean(_), Value::Boolean(_))
            | (Value::String(_), Value::String(_)) => val.clone(),
            (Value::Table(_), _) | (Value::Array(_), _) => {
                return Err(Error::Config(format!("parameter `{key}` is a section, not a value")))
            }
            (old, new) => {
                return Err(Error::Config(format!(
                    "parameter `{key}` expects {}, got {}",
                    old.type_str(),
                    new.type_str()
                )))
            }
        };
        *node = coerced;
    }
    root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

fn child<'a>(node: &'a mut Value, part: &str, key: &str) -> Result<&'a mut Value> {
    let unknown = || Error::Config(format!("unknown parameter `{key}`"));
    match node {
        Value::Table(t) => t.get_mut(part).ok_or_else(unknown),
        Value::Array(a) => {
            let i: usize = part.parse().map_err(|_| unknown())?;
            a.get_mut(i).ok_or_else(unknown)
        }
        _ => Err(unknown()),
    }
}

/// Parse `name=value` with a TOML scalar on the right.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not name=value")))?;
    let v = v.trim();
    let value = match format!("x = {v}").parse::<toml::Table>() {
        Ok(doc) => doc["x"].clone(),
        Err(_) => Value::String(v.to_string()),
    };
    Ok((k.trim().to_string(), value))
}
