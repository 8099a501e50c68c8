//! CSV flattening and atomic file output.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use super::CliError;

pub type Row = Vec<(String, Value)>;

fn scalar_fields(obj: &serde_json::Map<String, Value>, prefix: &str, out: &mut Row) {
    for (k, v) in obj {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => scalar_fields(inner, &key, out),
            Value::Array(_) if k == "rows" && prefix.is_empty() => {}
            other => out.push((key, other.clone())),
        }
    }
}

/// Turns a payload into table rows.
///
/// A payload with a top-level `rows` array yields one row per element;
/// anything else yields a single row of its scalar fields, nested objects
/// flattened with dotted keys.
pub fn flatten_rows(payload: &Value) -> Vec<Row> {
    let Value::Object(obj) = payload else {
        return vec![vec![("value".into(), payload.clone())]];
    };
    match obj.get("rows") {
        Some(Value::Array(rows)) => rows
            .iter()
            .map(|r| {
                let mut row = Row::new();
                if let Value::Object(o) = r {
                    scalar_fields(o, "", &mut row);
                }
                row
            })
            .collect(),
        _ => {
            let mut row = Row::new();
            scalar_fields(obj, "", &mut row);
            vec![row]
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Comma-separated table with a header row; columns in first-seen order.
pub fn to_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut header: Vec<String> = Vec::new();
    for row in rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        let record: Vec<String> = header
            .iter()
            .map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| cell(v)).unwrap_or_default())
            .collect();
        w.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rows_payload_becomes_table() {
        let payload = json!({ "rows": [{ "l": 1, "t": 0.5 }, { "l": 2, "t": 0.5 }], "fit": null });
        let csv = to_csv(&flatten_rows(&payload)).unwrap();
        assert_eq!(csv, "l,t\n1,0.5\n2,0.5\n");
    }

    #[test]
    fn scalar_payload_is_one_row() {
        let payload = json!({ "mean": 0.25, "dims": [2, 2], "fit": { "mu": 1.0 } });
        let rows = flatten_rows(&payload);
        assert_eq!(rows.len(), 1);
        let csv = to_csv(&rows).unwrap();
        assert!(csv.starts_with("mean,dims,fit.mu\n"));
        assert!(csv.contains("\"[2,2]\""));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
