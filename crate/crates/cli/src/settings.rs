//! Parameter resolution with precedence flags > config file > defaults.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Keys of a config file for `command`: top-level scalars, overridden by the
/// entries of a table named after the command. Tables of other commands are
/// ignored. Dashes in keys are read as underscores.
pub fn file_layer(path: &Path, command: &str) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))?;
    let mut out = Map::new();
    let mut section = None;
    for (key, value) in table {
        match value {
            toml::Value::Table(t) if key == command => section = Some(t),
            toml::Value::Table(_) => {}
            v => {
                out.insert(key.replace('-', "_"), to_json(v)?);
            }
        }
    }
    for (key, value) in section.into_iter().flatten() {
        out.insert(key.replace('-', "_"), to_json(value)?);
    }
    Ok(out)
}

fn to_json(v: toml::Value) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::usage(format!("config value: {e}")))
}

/// Flags that were given: `None` and unset switches are dropped.
pub fn flag_layer<A: Serialize>(args: &A) -> CliResult<Map<String, Value>> {
    match serde_json::to_value(args).map_err(|e| CliError::usage(e.to_string()))? {
        Value::Object(map) => Ok(map
            .into_iter()
            .filter(|(_, v)| !matches!(v, Value::Null | Value::Bool(false)))
            .collect()),
        _ => Err(CliError::usage("flags do not form a key-value set")),
    }
}

/// Merges the layers over the defaults of `P` and deserializes.
pub fn resolve<P: DeserializeOwned>(
    file: Map<String, Value>,
    flags: Map<String, Value>,
) -> CliResult<P> {
    let mut merged = file;
    merged.extend(flags);
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::usage(format!("invalid parameters: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct P {
        k: f64,
        h: f64,
        flag: bool,
    }

    impl Default for P {
        fn default() -> Self {
            P {
                k: 1.2,
                h: 0.0,
                flag: false,
            }
        }
    }

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn precedence() {
        let p: P = resolve(map(json!({"k": 1.5, "h": 2.0})), map(json!({"h": 3.0}))).unwrap();
        assert_eq!(p, P { k: 1.5, h: 3.0, flag: false });
        let p: P = resolve(Map::new(), Map::new()).unwrap();
        assert_eq!(p, P::default());
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let err = resolve::<P>(map(json!({"q": 1.0})), Map::new()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn file_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "k = 1.4\nt-max = 3\n[toy]\nk = 1.5\n[roots]\nk = 9\n").unwrap();
        let m = file_layer(&path, "toy").unwrap();
        assert_eq!(m["k"], json!(1.5));
        assert_eq!(m["t_max"], json!(3));
    }

    #[test]
    fn unset_flags_are_dropped() {
        #[derive(Serialize)]
        struct A {
            k: Option<f64>,
            h: Option<f64>,
            flag: bool,
        }
        let m = flag_layer(&A { k: Some(1.3), h: None, flag: false }).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["k"], json!(1.3));
    }
}
