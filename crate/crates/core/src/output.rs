//! CSV and JSON serialization of a [`ResultEnvelope`].
//!
//! CSV files open with a `#` comment block holding the software version,
//! the wall time, column labels, summary scalars and the full configuration
//! as TOML. JSON carries the same envelope as an object. Numbers use the
//! shortest exponent form that parses back to the same `f64`.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{Error, Result};
use crate::run::{Cell, ResultEnvelope};

/// Prefix of the header line excluded from golden comparisons.
pub const WALL_TIME_PREFIX: &str = "# wall_time_s = ";

fn number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(x) => number(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(x) if x.is_finite() => json!(x),
        Cell::Num(_) => Value::Null,
        Cell::Int(n) => json!(n),
        Cell::Text(s) => json!(s),
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_csv<W: Write>(env: &ResultEnvelope, mut out: W) -> Result<()> {
    writeln!(out, "# htc {}", env.version)?;
    writeln!(out, "# command = {}", env.command)?;
    writeln!(out, "{WALL_TIME_PREFIX}{:.3}", env.wall_time_s)?;
    writeln!(out, "# columns:")?;
    for c in &env.table.columns {
        if c.unit.is_empty() {
            writeln!(out, "#   {}: {}", c.name, c.symbol)?;
        } else {
            writeln!(out, "#   {}: {} [{}]", c.name, c.symbol, c.unit)?;
        }
    }
    if !env.summary.is_empty() {
        writeln!(out, "# summary:")?;
        for s in &env.summary {
            writeln!(out, "#   {} = {}  ({})", s.name, number(s.value), s.symbol)?;
        }
    }
    writeln!(out, "# config:")?;
    for line in env.config.to_toml()?.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "#   {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(env.table.columns.iter().map(|c| c.name.as_str()))
        .map_err(csv_error)?;
    for row in &env.table.rows {
        w.write_record(row.iter().map(cell_text)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(env: &ResultEnvelope) -> Result<Value> {
    let config = serde_json::to_value(&env.config).map_err(|e| Error::Io(e.to_string()))?;
    let rows: Vec<Value> = env
        .table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(cell_json).collect()))
        .collect();
    let summary: Vec<Value> = env
        .summary
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "symbol": s.symbol,
                "unit": s.unit,
                "value": if s.value.is_finite() { json!(s.value) } else { Value::Null },
            })
        })
        .collect();
    Ok(json!({
        "software": "htc",
        "version": env.version,
        "command": env.command.as_str(),
        "wall_time_s": env.wall_time_s,
        "config": config,
        "columns": env.table.columns,
        "rows": rows,
        "summary": summary,
    }))
}

pub fn write_json<W: Write>(env: &ResultEnvelope, mut out: W) -> Result<()> {
    let v = to_json(env)?;
    serde_json::to_writer_pretty(&mut out, &v).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn write<W: Write>(env: &ResultEnvelope, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(env, out),
        Format::Json => write_json(env, out),
    }
}
