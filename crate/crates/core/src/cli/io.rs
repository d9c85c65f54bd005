//! Tables, signal files and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{CliError, OutputFormat};
use crate::error::Error;
use crate::model::WatermarkSequence;

/// 17 significant digits, enough to round-trip any f64.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => real(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Real(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(real(*v))),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(k, c)| (k.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Writes `contents` through a temporary file in the target directory and
/// renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| CliError::from(Error::io(path, e));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// `dir/stem.ext` becomes `dir/stem_suffix.ext`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

/// Emits to `path` if given, otherwise to stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

/// One real per line; blank lines are skipped. An empty file is an error.
pub fn parse_signal(text: &str, path: &Path) -> Result<Vec<f64>, Error> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: format!("not a real number: {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: "value is not finite".into(),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: "file contains no samples".into(),
        });
    }
    Ok(values)
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal(&text, path)
}

/// A watermark file holds one ±1 per line.
pub fn read_watermark(path: &Path) -> Result<WatermarkSequence, Error> {
    let values = read_signal(path)?;
    let mut signs = Vec::with_capacity(values.len());
    for (idx, v) in values.iter().enumerate() {
        signs.push(match *v {
            1.0 => 1i8,
            -1.0 => -1i8,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("watermark entries must be +1 or -1, got {v}"),
                })
            }
        });
    }
    WatermarkSequence::from_signs(&signs)
}

pub fn signal_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&real(*v));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_and_json_tables() {
        let mut t = Table::new(&["n", "p", "e"]);
        t.push(vec![Cell::from(4usize), Cell::from(0.25), Cell::from(None)]);
        assert_eq!(t.render(OutputFormat::Csv), "n,p,e\n4,2.5000000000000000e-1,\n");
        let v: Value = serde_json::from_str(&t.render(OutputFormat::Json)).unwrap();
        assert_eq!(v[0]["n"], 4);
        assert_eq!(v[0]["p"], 0.25);
        assert!(v[0]["e"].is_null());
    }

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("out/fig2.csv"), "sz2_0.5"), Path::new("out/fig2_sz2_0.5.csv"));
        assert_eq!(with_suffix(Path::new("data"), "x"), Path::new("data_x"));
        assert_eq!(with_suffix(Path::new("a.csv"), ""), Path::new("a.csv"));
    }

    #[test]
    fn signal_parsing_reports_line_numbers() {
        let p = Path::new("s.csv");
        assert_eq!(parse_signal("1.5\n\n-2e-1\n", p).unwrap(), vec![1.5, -0.2]);
        match parse_signal("1\n2\nthree\n", p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        assert!(parse_signal("\n \n", p).is_err());
        assert!(parse_signal("nan\n", p).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
