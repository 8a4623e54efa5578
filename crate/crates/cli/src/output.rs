//! File formats: wide CSV time series and pretty JSON documents.
//!
//! Numbers are written with 17 significant digits so that reading a file
//! back reproduces every value bit for bit.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use memincl::StateVector;
use serde::Serialize;

/// Writes `time,node_1..node_n` with one row per entry of `rows`.
pub fn write_series(path: &Path, times: &[f64], rows: &[StateVector]) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let n = rows.first().map_or(0, |r| r.len());
    write!(out, "time")?;
    for i in 1..=n {
        write!(out, ",node_{i}")?;
    }
    writeln!(out)?;
    for (t, row) in times.iter().zip(rows) {
        write!(out, "{t:.16e}")?;
        for x in row.iter() {
            write!(out, ",{x:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Reads a file produced by [`write_series`].
pub fn read_series(path: &Path) -> io::Result<(Vec<f64>, Vec<StateVector>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| invalid("empty file".into()))??;
    let width = header.split(',').count();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| invalid(format!("row {}: {e}", k + 1)))?;
        if vals.len() != width {
            return Err(invalid(format!("row {} has {} columns, expected {width}", k + 1, vals.len())));
        }
        times.push(vals[0]);
        rows.push(StateVector::from_column_slice(&vals[1..]));
    }
    Ok((times, rows))
}

/// Writes a CSV with the given header and numeric rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}
