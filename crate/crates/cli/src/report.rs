//! Report envelope, deterministic serialisation and atomic output.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const TOOL: &str = "spreadlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Compact JSON with every float written as 17 significant digits.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{}", format_float(f64::from(value)))
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub struct Report {
    pub subcommand: &'static str,
    pub config: Value,
    pub seed: u64,
    pub method: String,
    pub result: Value,
    /// Optional tabular view for CSV output: header and rows.
    pub table: Option<(Vec<String>, Vec<Vec<Value>>)>,
}

impl Report {
    pub fn envelope(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), TOOL.into());
        m.insert("version".into(), VERSION.into());
        m.insert("subcommand".into(), self.subcommand.into());
        m.insert("seed".into(), self.seed.into());
        m.insert("config".into(), self.config.clone());
        m.insert("method".into(), self.method.clone().into());
        m.insert("result".into(), self.result.clone());
        Value::Object(m)
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        to_json_bytes(&self.envelope())
    }

    /// The table if there is one, otherwise the flattened result as key,value rows.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let (header, rows) = match &self.table {
            Some(t) => t.clone(),
            None => {
                let mut rows = Vec::new();
                flatten("", &self.envelope(), &mut rows);
                (vec!["key".into(), "value".into()], rows.into_iter().map(|(k, v)| vec![Value::String(k), v]).collect())
            }
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        for row in rows {
            w.write_record(row.iter().map(cell))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format_float(n.as_f64().expect("f64 number")),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let bytes = to_json_bytes(&serde_json::json!({"a": 0.1, "b": 3, "c": f64::NAN})).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "{\"a\":1.0000000000000001e-1,\"b\":3,\"c\":null}\n");
    }

    #[test]
    fn float_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
