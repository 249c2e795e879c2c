//! Tabular output in CSV or JSON.

use std::io::Write;

use serde_json::{Map, Value};

use crate::numfmt::format_sig;
use crate::sweep::SweepTable;

use super::config::Format;

pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x, SIG_DIGITS),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x)
                .map_or_else(|| Value::String(format_sig(*x, SIG_DIGITS)), Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    /// Header always present, LF terminators.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let map: Map<String, Value> = self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(map)
            })
            .collect();
        serde_json::to_writer_pretty(&mut out, &records)?;
        out.write_all(b"\n")
    }

    pub fn to_bytes(&self, format: Format) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(format, &mut buf).expect("writing to memory");
        buf
    }
}

/// Standard coherence columns: axes..., g2, g3, g4, mean_clicks, pipeline, diagnostics.
pub fn coherence_header(axes: &[&str]) -> Vec<String> {
    axes.iter()
        .map(|s| s.to_string())
        .chain(["g2", "g3", "g4", "mean_clicks", "pipeline", "diagnostics"].map(String::from))
        .collect()
}

pub fn coherence_row(
    axis_values: &[f64],
    values: [Option<f64>; 3],
    mean: Option<f64>,
    pipeline: &str,
    diagnostics: &str,
) -> Vec<Cell> {
    axis_values
        .iter()
        .map(|&v| Cell::Num(v))
        .chain(values.into_iter().map(Cell::from))
        .chain([
            Cell::from(mean),
            Cell::Text(pipeline.into()),
            Cell::Text(diagnostics.into()),
        ])
        .collect()
}

pub fn sweep_table(table: &SweepTable) -> Table {
    let names: Vec<&str> = table.axis_names.iter().map(String::as_str).collect();
    let mut t = Table::new(coherence_header(&names));
    let pipeline = table.pipeline.to_string();
    for row in &table.rows {
        t.push(coherence_row(
            &row.axis_values,
            row.values,
            row.mean_clicks,
            &pipeline,
            &row.diagnostics,
        ));
    }
    t
}
