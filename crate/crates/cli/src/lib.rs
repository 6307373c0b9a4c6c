//! Library side of the `entconc` command: sweeps, figure presets, the
//! manifest and the table writers.

pub mod presets;
pub mod sweep;

use std::io::Write;

use entconc_core::{
    Cooperativities, DetectorEfficiency, Measurement, MeasurementRecord, Method, TruncationPolicy,
};
use serde::Serialize;

pub use presets::{manifest, preset, Manifest, Preset, PRESET_NAMES, SCHEMA_VERSION};
pub use sweep::{axis_values, run_sweep, Axis, AxisRange, Column, SweepConfig, SweepTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            CliError::Invalid(m) => CliError::Invalid(format!("{ctx}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{ctx}: {m}")),
            io => io,
        }
    }
}

impl From<entconc_core::Error> for CliError {
    fn from(e: entconc_core::Error) -> Self {
        if e.is_invalid_input() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// Shortest decimal that round-trips; the q axis prints as an integer.
fn format_cell(v: Option<f64>, integer: bool) -> String {
    match v {
        None => String::new(),
        Some(x) if integer => format!("{}", x as u64),
        Some(x) => format!("{x:?}"),
    }
}

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
    for row in &table.rows {
        w.write_record(
            row.iter()
                .enumerate()
                .map(|(i, &v)| format_cell(v, i == 0 && table.axis == Axis::Q)),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonTable<'a> {
    schema_version: &'static str,
    axis: Axis,
    columns: Vec<&'a str>,
    rows: &'a [Vec<Option<f64>>],
}

pub fn write_json<W: Write>(table: &SweepTable, mut out: W) -> Result<(), CliError> {
    let doc = JsonTable {
        schema_version: SCHEMA_VERSION,
        axis: table.axis,
        columns: table.columns.iter().map(|c| c.name.as_str()).collect(),
        rows: &table.rows,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_table<W: Write>(table: &SweepTable, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(table, out),
        Format::Json => write_json(table, out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointChannel {
    Count,
    Off,
    On,
}

impl std::str::FromStr for PointChannel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "count" => Ok(PointChannel::Count),
            "off" => Ok(PointChannel::Off),
            "on" => Ok(PointChannel::On),
            _ => Err(format!("unknown channel '{s}' (expected count, off or on)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    pub c1: f64,
    pub c2: f64,
    pub q: usize,
    pub mu: f64,
    pub channel: PointChannel,
    pub methods: Vec<Method>,
    pub policy: TruncationPolicy,
}

pub fn run_point(cfg: &PointConfig) -> Result<MeasurementRecord, CliError> {
    if cfg.methods.is_empty() {
        return Err(CliError::Invalid("no methods requested".into()));
    }
    let coop = Cooperativities::new(cfg.c1, cfg.c2)?;
    let measurement = match cfg.channel {
        PointChannel::Count => Measurement::Count {
            mu: DetectorEfficiency::new(cfg.mu)?,
            q: cfg.q,
        },
        PointChannel::Off => Measurement::Off,
        PointChannel::On => Measurement::On,
    };
    Ok(MeasurementRecord::evaluate(
        &coop,
        measurement,
        &cfg.methods,
        &cfg.policy,
    )?)
}

/// Point record as a two-column `method,value` table.
pub fn write_point_csv<W: Write>(rec: &MeasurementRecord, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["method", "value", "applicable"])?;
    for (m, v) in &rec.entanglement {
        w.write_record([
            m.to_string(),
            format_cell(v.value.map(|e| e.nats()), false),
            v.applicable.to_string(),
        ])?;
    }
    w.write_record([
        "prob".to_string(),
        format_cell(Some(rec.probability), false),
        String::new(),
    ])?;
    w.write_record([
        "trunc_deficit".to_string(),
        format_cell(Some(rec.truncation.trace_deficit), false),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}
