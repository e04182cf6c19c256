use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Serialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub diagnostics: Map<String, Value>,
}

impl ReportRecord {
    pub fn new(command: &str, inputs: Map<String, Value>) -> Self {
        ReportRecord {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            outputs: Map::new(),
            table: None,
            diagnostics: Map::new(),
        }
    }

    pub fn out(&mut self, key: &str, v: impl Into<Value>) {
        self.outputs.insert(key.to_string(), v.into());
    }

    pub fn diag(&mut self, key: &str, v: impl Into<Value>) {
        self.diagnostics.insert(key.to_string(), v.into());
    }

    pub fn write(&self, format: Format, w: &mut dyn Write) -> Result<(), Failure> {
        let io = |e: std::io::Error| Failure::Runtime(format!("writing report: {e}"));
        match format {
            Format::Json => {
                let line = serde_json::to_string(self).map_err(|e| Failure::Runtime(e.to_string()))?;
                writeln!(w, "{line}").map_err(io)
            }
            Format::Csv => {
                let mut wtr = csv::Writer::from_writer(w);
                let csv_err = |e: csv::Error| Failure::Runtime(format!("writing csv: {e}"));
                match &self.table {
                    Some(t) => {
                        wtr.write_record(&t.columns).map_err(csv_err)?;
                        for row in &t.rows {
                            wtr.write_record(row.iter().map(cell)).map_err(csv_err)?;
                        }
                    }
                    None => {
                        wtr.write_record(self.outputs.keys()).map_err(csv_err)?;
                        wtr.write_record(self.outputs.values().map(cell)).map_err(csv_err)?;
                    }
                }
                wtr.flush().map_err(io)
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

pub fn num(x: f64) -> Value {
    // non-finite values have no JSON number form
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}
