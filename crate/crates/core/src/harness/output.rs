//! Report rendering: CSV (header row, comma separator, `.` decimal point,
//! LF line endings) and JSON (one object with `config`, `rows`,
//! `tool_version`, `elapsed_seconds`).
//!
//! CSV output carries only the rows and is byte-identical across reruns of
//! the same config and master seed; the JSON envelope additionally records
//! the wall-clock time, which is inherently run-dependent.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(crate::error::Error::Parse(format!(
                "unknown format `{other}` (expected csv|json)"
            ))),
        }
    }
}

/// A row that knows how to print itself as one CSV line.
pub trait CsvRow {
    fn csv_header() -> &'static str;
    fn csv_line(&self) -> String;
}

#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize + CsvRow> {
    pub config: C,
    pub rows: Vec<R>,
    pub tool_version: String,
    pub elapsed_seconds: f64,
}

impl<C: Serialize, R: Serialize + CsvRow> Report<C, R> {
    pub fn new(config: C, rows: Vec<R>, elapsed_seconds: f64) -> Self {
        Report {
            config,
            rows,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_seconds,
        }
    }

    pub fn csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(R::csv_header());
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.csv_string(),
            OutputFormat::Json => self.json_string(),
        }
    }
}

/// Plain per-trial dump used by `--dump-trials`.
pub fn trials_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::new();
    out.push_str(R::csv_header());
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Write to a file, or stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(p, content)?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

/// Format a float for CSV: shortest round-trip decimal, `NaN` for missing.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize)]
    struct Row {
        a: u64,
        b: f64,
    }

    impl CsvRow for Row {
        fn csv_header() -> &'static str {
            "a,b"
        }
        fn csv_line(&self) -> String {
            format!("{},{}", self.a, fmt_f64(self.b))
        }
    }

    #[test]
    fn csv_rendering_is_lf_terminated() {
        let r = Report::new("cfg", vec![Row { a: 1, b: 0.5 }, Row { a: 2, b: f64::NAN }], 0.1);
        let s = r.csv_string();
        assert_eq!(s, "a,b\n1,0.5\n2,NaN\n");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn json_has_envelope_fields() {
        let r = Report::new("cfg", vec![Row { a: 1, b: 2.0 }], 0.25);
        let v: serde_json::Value = serde_json::from_str(&r.json_string()).unwrap();
        assert!(v.get("config").is_some());
        assert!(v.get("rows").is_some());
        assert!(v.get("tool_version").is_some());
        assert!(v.get("elapsed_seconds").is_some());
    }
}
