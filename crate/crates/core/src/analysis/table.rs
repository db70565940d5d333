//! CSV encoding of sweep results.
//!
//! Numbers use C `%.6e` formatting (`1.234560e-02`), rows end in `\n`.
//! Degenerate ratios are written as `inf`; absent values as empty fields.

use std::path::Path;

use super::sweep::{OverlapRecord, SweepReport};
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 6] = ["layer", "method", "k", "frob_rel", "out_rel", "wall_ms"];
pub const OVERLAP_HEADER: [&str; 5] = ["layer", "method_a", "method_b", "k", "iou"];

/// Formats like C's `%.6e`.
pub fn fmt_sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let timed = report.config.record_wall_clock;
    to_csv(
        SWEEP_HEADER,
        report.errors.iter().map(|r| {
            [
                r.layer.clone(),
                r.method.to_string(),
                r.k.to_string(),
                fmt_sci(r.frob_rel),
                r.out_rel.map(fmt_sci).unwrap_or_default(),
                if timed { fmt_sci(r.wall_ms) } else { String::new() },
            ]
        }),
    )
}

pub fn overlap_csv(records: &[OverlapRecord]) -> String {
    to_csv(
        OVERLAP_HEADER,
        records.iter().map(|r| {
            [
                r.layer.clone(),
                r.method_a.to_string(),
                r.method_b.to_string(),
                r.k.to_string(),
                fmt_sci(r.iou),
            ]
        }),
    )
}

/// One parsed row of `sweep.csv`. The method is kept as text so reports can
/// be drawn for files produced by other tools.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layer: String,
    pub method: String,
    pub k: usize,
    pub frob_rel: f64,
    pub out_rel: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_csv(path, &text)
}

pub fn parse_sweep_csv(path: &Path, text: &str) -> Result<Vec<SweepRow>> {
    let bad = |detail: String| Error::Format {
        path: path.to_path_buf(),
        field: "sweep.csv",
        detail,
    };
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(bad(format!(
            "header must be `{}`, found `{}`",
            SWEEP_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
        let num = |col: usize| -> Result<Option<f64>> {
            let s = rec[col].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("line {line}: `{s}` in column {} is not a number", SWEEP_HEADER[col])))
        };
        let k = rec[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("line {line}: budget `{}` is not an integer", &rec[2])))?;
        rows.push(SweepRow {
            layer: rec[0].to_owned(),
            method: rec[1].to_owned(),
            k,
            frob_rel: num(3)?.ok_or_else(|| bad(format!("line {line}: frob_rel is empty")))?,
            out_rel: num(4)?,
            wall_ms: num(5)?,
        });
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(rows)
}
