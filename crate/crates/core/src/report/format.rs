//! CSV and JSON writers for sweep reports.

use super::{Report, SweepSpec, SCHEMA_VERSION};
use crate::error::{FrioError, Result};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

/// Seventeen significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => f.write_str(&format_number(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) => RawValue::from_string(format_number(*v))
                .map_err(serde::ser::Error::custom)?
                .serialize(serializer),
            Cell::Int(v) => serializer.serialize_u64(*v),
            Cell::Text(s) => serializer.serialize_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = FrioError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(FrioError::Usage(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

struct Row<'a>(&'a [(&'static str, Cell)]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    generated: Option<u64>,
    spec: &'a SweepSpec,
    rows: Vec<Row<'a>>,
}

pub fn to_csv(report: &Report, generated: Option<u64>) -> String {
    let mut out = format!("# schema={SCHEMA_VERSION}\n");
    if let Some(t) = generated {
        out.push_str(&format!("# generated={t}\n"));
    }
    let rows: Vec<_> = report.rows.iter().map(|r| r.cells()).collect();
    if let Some(first) = rows.first() {
        let header: Vec<&str> = first.iter().map(|(k, _)| *k).collect();
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for cells in &rows {
        let line: Vec<String> = cells.iter().map(|(_, c)| c.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(report: &Report, generated: Option<u64>) -> Result<String> {
    let cells: Vec<_> = report.rows.iter().map(|r| r.cells()).collect();
    let doc = JsonReport {
        schema: SCHEMA_VERSION,
        generated,
        spec: &report.spec,
        rows: cells.iter().map(|c| Row(c)).collect(),
    };
    let mut text =
        serde_json::to_string_pretty(&doc).map_err(|e| FrioError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn render(report: &Report, format: Format, generated: Option<u64>) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(report, generated)),
        Format::Json => to_json(report, generated),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{run_sweep, QMode};

    fn report() -> Report {
        run_sweep(&SweepSpec {
            s_values: vec![0.0, 0.5, 0.87],
            q_mode: QMode::Half,
            ..SweepSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = 0.1f64 + 0.2;
        let text = format_number(v);
        assert_eq!(text, "3.0000000000000004e-1");
        assert_eq!(text.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&report(), Some(7));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines[1], "# generated=7");
        assert!(lines[2].starts_with("s,eta1,Q,interval,p1,r1,q1,p2,r2,q2,Ps,Pe,Q_avg"));
        assert_eq!(lines.len(), 6);
        let no_stamp = to_csv(&report(), None);
        assert!(!no_stamp.contains("generated"));
    }

    #[test]
    fn json_values_match_csv() {
        let r = report();
        let csv = to_csv(&r, None);
        let json: serde_json::Value = serde_json::from_str(&to_json(&r, None).unwrap()).unwrap();
        assert_eq!(json["schema"], 1);
        let mut lines = csv.lines().skip(1);
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        for (line, row) in lines.zip(json["rows"].as_array().unwrap()) {
            for (k, v) in header.iter().zip(line.split(',')) {
                let j = &row[*k];
                match j {
                    serde_json::Value::String(s) => assert_eq!(s, v),
                    other => assert_eq!(other.as_f64().unwrap(), v.parse::<f64>().unwrap(), "{k}"),
                }
            }
        }
    }

    #[test]
    fn unknown_format_is_usage_error() {
        assert!(matches!("xml".parse::<Format>(), Err(FrioError::Usage(_))));
    }
}
