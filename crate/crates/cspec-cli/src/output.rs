//! CSV/JSON emission shared by the subcommands.
//!
//! CSV: header row, comma separator, decimal point, 17-significant-digit
//! floats. JSON documents carry the "cspec-report/1" schema tag with the
//! same columns plus a summary object.

use cspec_core::sweep::{fmt_f64, REPORT_SCHEMA};
use cspec_core::Result;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&str>) -> Self {
        Table { columns: columns.into_iter().map(String::from).collect(), rows: Vec::new() }
    }

    pub fn new_owned(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    schema: &'static str,
    columns: &'a [String],
    data: &'a [Vec<f64>],
    summary: &'a serde_json::Value,
}

pub struct OutputSink {
    path: Option<PathBuf>,
}

impl OutputSink {
    pub fn new(path: Option<PathBuf>) -> Result<Self> {
        Ok(OutputSink { path })
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.path {
            Some(path) => std::fs::write(path, text)?,
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }

    pub fn write_table(
        &self,
        format: &str,
        table: &Table,
        summary: &serde_json::Value,
    ) -> Result<()> {
        match format {
            "json" => {
                let doc = JsonDoc {
                    schema: REPORT_SCHEMA,
                    columns: &table.columns,
                    data: &table.rows,
                    summary,
                };
                let mut text = serde_json::to_string_pretty(&doc)?;
                text.push('\n');
                self.emit(&text)
            }
            _ => {
                let text = table.to_csv();
                if !summary.as_object().map(|m| m.is_empty()).unwrap_or(true) {
                    // summary goes to stderr so the CSV stream stays clean
                    eprintln!("summary: {summary}");
                }
                self.emit(&text)
            }
        }
    }
}
