//! Numeric tables as comma-separated text with `# key: value` header lines.
//!
//! All command outputs and measured-data inputs use this format. Values are
//! written with the shortest decimal representation that parses back to the
//! same f64, so write/read round-trips are lossless.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataTable {
    /// Key/value pairs emitted as `# key: value` before the header.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    /// Row-major values; every row has one entry per column.
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { metadata: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn push_metadata(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Table(format!(
                "missing column '{name}' (have: {})",
                self.columns.join(", ")
            )))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Table(format!(
                "row has {} values but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_string_lossless(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            match &columns {
                None => {
                    columns = Some(line.split(',').map(|c| c.trim().to_string()).collect());
                }
                Some(cols) => {
                    let cells: Vec<&str> = line.split(',').collect();
                    if cells.len() != cols.len() {
                        return Err(Error::Table(format!(
                            "line {}: {} values but {} columns",
                            lineno + 1,
                            cells.len(),
                            cols.len()
                        )));
                    }
                    let mut row = Vec::with_capacity(cells.len());
                    for cell in cells {
                        let v: f64 = cell.trim().parse().map_err(|_| {
                            Error::Table(format!(
                                "line {}: '{}' is not a number",
                                lineno + 1,
                                cell.trim()
                            ))
                        })?;
                        row.push(v);
                    }
                    rows.push(row);
                }
            }
        }
        let columns = columns.ok_or_else(|| Error::Table("no header line found".into()))?;
        Ok(Self { metadata, columns, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Table(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Writes atomically: the content lands in a sibling temporary file that
    /// is renamed over the target, so readers never observe partial output.
    pub fn write_path(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_string_lossless())
    }
}

/// Write-then-rename within the target directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trips_exactly() {
        let mut t = DataTable::new(vec!["x".into(), "y".into()]);
        t.push_metadata("seed", 42u64);
        t.push_metadata("note", "plain text");
        t.push_row(vec![0.1, 1.0 / 3.0]).unwrap();
        t.push_row(vec![-0.0, f64::MIN_POSITIVE]).unwrap();
        let back = DataTable::parse_str(&t.to_string_lossless()).unwrap();
        assert_eq!(back.metadata_value("seed"), Some("42"));
        assert_eq!(back.metadata_value("note"), Some("plain text"));
        assert_eq!(back.columns, t.columns);
        for (a, b) in t.rows.iter().flatten().zip(back.rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_cells_name_the_line() {
        let err = DataTable::parse_str("x,y\n1,2\n3,oops\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("oops"), "{msg}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = DataTable::parse_str("x,y\n1,2,3\n").unwrap_err();
        assert!(err.to_string().contains("columns"));
    }

    #[test]
    fn missing_column_lists_the_available_ones() {
        let t = DataTable::parse_str("x,y\n1,2\n").unwrap();
        let err = t.column("z").unwrap_err();
        assert!(err.to_string().contains("x, y"));
    }

    #[test]
    fn atomic_write_replaces_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut t = DataTable::new(vec!["a".into()]);
        t.push_row(vec![1.0]).unwrap();
        t.write_path(&path).unwrap();
        t.rows[0][0] = 2.0;
        t.write_path(&path).unwrap();
        let back = DataTable::read_path(&path).unwrap();
        assert_eq!(back.rows[0][0], 2.0);
        assert!(!path.with_extension("csv.part").exists());
    }

    proptest! {
        #[test]
        fn arbitrary_finite_values_round_trip(
            values in proptest::collection::vec(-1e300f64..1e300, 1..40)
        ) {
            let mut t = DataTable::new(vec!["v".into()]);
            for v in &values {
                t.push_row(vec![*v]).unwrap();
            }
            let back = DataTable::parse_str(&t.to_string_lossless()).unwrap();
            for (a, b) in values.iter().zip(back.rows.iter().map(|r| r[0])) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
