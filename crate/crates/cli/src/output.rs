//! JSON and CSV emission. CSV is a flattening of the JSON value, so both
//! formats carry the same numbers formatted the same way.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::{Format, OutputArgs};

pub fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("report types serialize") {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("value".into(), other);
            map
        }
    }
}

/// A report object, optionally with one array of row objects that
/// becomes the CSV body.
pub struct Report {
    pub value: Map<String, Value>,
    pub table: Option<&'static str>,
}

impl Report {
    pub fn new(value: Map<String, Value>) -> Self {
        Self { value, table: None }
    }

    pub fn with_table(mut self, key: &'static str) -> Self {
        self.table = Some(key);
        self
    }

    pub fn write(&self, args: &OutputArgs) -> io::Result<()> {
        let mut out = open(args.out.as_deref())?;
        match args.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.value)?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(&mut out)?,
        }
        out.flush()
    }

    fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut head = self.value.clone();
        let rows = match self.table.and_then(|k| head.remove(k)) {
            Some(Value::Array(rows)) => rows,
            Some(other) => vec![other],
            None => Vec::new(),
        };
        let mut head_cells = Vec::new();
        flatten("", &Value::Object(head), &mut head_cells);

        let mut w = csv::Writer::from_writer(out);
        if rows.is_empty() {
            w.write_record(head_cells.iter().map(|c| c.0.as_str()))?;
            w.write_record(head_cells.iter().map(|c| c.1.as_str()))?;
            return w.flush();
        }
        let prefix = self.table.unwrap_or("row");
        let mut header: Option<Vec<String>> = None;
        for row in &rows {
            let mut cells = Vec::new();
            flatten("", row, &mut cells);
            if header.is_none() {
                let mut names: Vec<String> = head_cells.iter().map(|c| c.0.clone()).collect();
                for (k, _) in &cells {
                    // disambiguate row columns that shadow report fields
                    if names.contains(k) {
                        names.push(format!("{prefix}.{k}"));
                    } else {
                        names.push(k.clone());
                    }
                }
                w.write_record(&names)?;
                header = Some(names);
            }
            w.write_record(
                head_cells
                    .iter()
                    .map(|c| c.1.as_str())
                    .chain(cells.iter().map(|c| c.1.as_str())),
            )?;
        }
        w.flush()
    }
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Scalar cell text: numbers in shortest round-trip form, arrays of
/// scalars joined with `;`.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// Flattens nested objects into dotted column names.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let name = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&name, inner, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}
