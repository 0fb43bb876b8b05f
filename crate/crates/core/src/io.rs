//! CSV datasets.
//!
//! `curves.csv`: one row per curve, `id,v1,...,vL`. A leading header row is
//! recognised by its non-numeric value columns and skipped.
//!
//! `responses.csv`: long format, one row per response, `id,response`, with
//! an optional `id,response` header. Every curve must have at least one
//! response and every response id must name a curve.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::{Curve, Dataset};
use crate::sim::fmt_float;

fn parse_err(path: &str, line: u64, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: format!("line {line}: {message}"),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Parses curves from any reader; `name` is used in error messages.
pub fn parse_curves<R: Read>(input: R, name: &str) -> Result<Vec<Curve>> {
    let mut curves = Vec::new();
    let mut seen = HashMap::new();
    for (row, rec) in reader(input).records().enumerate() {
        let rec = rec.map_err(|e| parse_err(name, e.position().map_or(0, |p| p.line()), &e))?;
        let line = record_line(&rec);
        if rec.len() < 2 {
            return Err(parse_err(
                name,
                line,
                "expected an identifier followed by curve values",
            ));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().skip(1).map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(parse_err(name, line, format!("bad curve value: {e}"))),
        };
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(parse_err(name, line, "empty curve identifier"));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(parse_err(
                name,
                line,
                format!("curve `{id}` already defined on line {first}"),
            ));
        }
        let curve = Curve::with_id(id, values).map_err(|e| parse_err(name, line, e))?;
        curves.push(curve);
    }
    if curves.is_empty() {
        return Err(parse_err(name, 0, "no curves"));
    }
    Ok(curves)
}

/// Parses long-format responses and attaches them to `curves`.
pub fn parse_responses<R: Read>(input: R, name: &str, curves: Vec<Curve>) -> Result<Dataset> {
    let index: HashMap<&str, usize> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| (c.label(), i))
        .collect();
    let mut responses = vec![Vec::new(); curves.len()];
    for (row, rec) in reader(input).records().enumerate() {
        let rec = rec.map_err(|e| parse_err(name, e.position().map_or(0, |p| p.line()), &e))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(parse_err(
                name,
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let y = match rec[1].parse::<f64>() {
            Ok(y) => y,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(parse_err(name, line, format!("bad response: {e}"))),
        };
        let Some(&i) = index.get(&rec[0]) else {
            return Err(parse_err(
                name,
                line,
                format!("unknown curve `{}`", &rec[0]),
            ));
        };
        if !(y > 0.0 && y.is_finite()) {
            return Err(parse_err(
                name,
                line,
                format!("response {y} is not a finite positive number"),
            ));
        }
        responses[i].push(y);
    }
    drop(index);
    Dataset::new(curves, responses).map_err(|e| Error::Parse {
        path: name.to_string(),
        message: e.to_string(),
    })
}

pub fn read_curves(path: &Path) -> Result<Vec<Curve>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_curves(file, &path.display().to_string())
}

pub fn read_dataset(curves_path: &Path, responses_path: &Path) -> Result<Dataset> {
    let curves = read_curves(curves_path)?;
    let file = std::fs::File::open(responses_path).map_err(|e| io_err(responses_path, e))?;
    parse_responses(file, &responses_path.display().to_string(), curves)
}

fn writer_err(name: &str, e: csv::Error) -> Error {
    Error::Io {
        path: name.to_string(),
        message: e.to_string(),
    }
}

pub fn write_curves<W: Write>(curves: &[Curve], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let len = curves.first().map_or(0, Curve::len);
    let header = std::iter::once("id".to_string()).chain((1..=len).map(|j| format!("v{j}")));
    w.write_record(header)
        .map_err(|e| writer_err("curves.csv", e))?;
    for c in curves {
        let row =
            std::iter::once(c.label().to_string()).chain(c.values().iter().map(|&v| fmt_float(v)));
        w.write_record(row)
            .map_err(|e| writer_err("curves.csv", e))?;
    }
    w.flush().map_err(|e| writer_err("curves.csv", e.into()))
}

pub fn write_responses<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "response"])
        .map_err(|e| writer_err("responses.csv", e))?;
    for (c, ys) in ds.curves().iter().zip(ds.responses()) {
        for &y in ys {
            w.write_record([c.label(), &fmt_float(y)])
                .map_err(|e| writer_err("responses.csv", e))?;
        }
    }
    w.flush().map_err(|e| writer_err("responses.csv", e.into()))
}
