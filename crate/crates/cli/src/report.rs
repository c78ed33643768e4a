//! Canonical report encoding: sorted keys, floats rounded to nine
//! significant digits, non-finite values as `null`.

use std::path::Path;

use pcqa_core::numfmt::round_sig9;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{CliError, CliResult};

pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(f) if f.is_finite() => Number::from_f64(round_sig9(f)).map_or(Value::Null, Value::Number),
            _ => Value::Null,
        },
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

pub fn to_canonical_value<T: Serialize>(value: &T) -> CliResult<Value> {
    Ok(canonicalize(serde_json::to_value(value)?))
}

/// Pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(&to_canonical_value(value)?)?;
    text.push('\n');
    Ok(text)
}

/// Float cell for CSV output; empty for missing or non-finite values.
pub fn csv_float(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => {
            let r = round_sig9(v);
            if r == r.trunc() && r.abs() < 1e15 {
                format!("{r:.1}")
            } else {
                format!("{r:?}")
            }
        }
        _ => String::new(),
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Sends output to `out` when given, stdout otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounds_and_nulls() {
        let v = canonicalize(json!({"b": 1.0 / 3.0, "a": f64::NAN, "n": 7, "list": [0.1 + 0.2]}));
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"a":null,"b":0.333333333,"list":[0.3],"n":7}"#
        );
    }

    #[test]
    fn infinity_becomes_null() {
        let v = to_canonical_value(&f64::INFINITY).unwrap();
        assert!(v.is_null());
    }

    #[test]
    fn csv_cells() {
        assert_eq!(csv_float(Some(2.0)), "2.0");
        assert_eq!(csv_float(Some(1.0 / 3.0)), "0.333333333");
        assert_eq!(csv_float(Some(f64::INFINITY)), "");
        assert_eq!(csv_float(None), "");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
