//! Trace and sample CSV files.
//!
//! Trace columns: `k,t,x,y,h,M,in_switch,err_abs`. `h` is `+1` or `-1`,
//! `in_switch` is `1` or `0`, and `x`/`err_abs` are empty when the sample is
//! unknown. Floats use the shortest representation that parses back exactly.

use std::path::Path;

use odm_core::{CodecParams, StepRecord, Symbol, Trace};

use crate::error::{HarnessError, Result};

pub const TRACE_HEADER: [&str; 8] = ["k", "t", "x", "y", "h", "M", "in_switch", "err_abs"];

pub fn render_trace(trace: &Trace) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::io(Path::new("<trace>"), e.into());
    w.write_record(TRACE_HEADER).map_err(io)?;
    for r in &trace.records {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.k.to_string(),
            r.t.to_string(),
            opt(r.x),
            r.y.to_string(),
            r.h.to_string(),
            r.m.to_string(),
            u8::from(r.in_switch).to_string(),
            opt(r.abs_error()),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| HarnessError::io(Path::new("<trace>"), e.into_error()))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| HarnessError::Csv {
        path: path.to_owned(),
        row: 0,
        detail: format!("missing column {name:?}"),
    })
}

/// Reads a trace CSV written by [`render_trace`].
pub fn parse_trace(path: &Path, text: &str, params: CodecParams) -> Result<Trace> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    let cols: Vec<usize> = ["k", "x", "y", "h", "M", "in_switch"]
        .iter()
        .map(|name| column(&headers, name, path))
        .collect::<Result<_>>()?;
    let mut trace = Trace::new(params);
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| csv_err(path, row_no, e))?;
        let bad = |detail: String| HarnessError::Csv { path: path.to_owned(), row: row_no, detail };
        let field = |c: usize| row.get(c).unwrap_or("");
        let num = |c: usize| field(c).parse::<f64>().map_err(|e| bad(format!("{:?}: {e}", field(c))));
        let k: usize = field(cols[0]).parse().map_err(|e| bad(format!("k {:?}: {e}", field(cols[0]))))?;
        if k != trace.len() {
            return Err(bad(format!("expected k = {}, found {k}", trace.len())));
        }
        let x = if field(cols[1]).is_empty() { None } else { Some(num(cols[1])?) };
        let h = match field(cols[3]) {
            "+1" | "1" => Symbol::Plus,
            "-1" => Symbol::Minus,
            other => return Err(bad(format!("h must be +1 or -1, found {other:?}"))),
        };
        let in_switch = match field(cols[5]) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(format!("in_switch must be 0 or 1, found {other:?}"))),
        };
        trace.records.push(StepRecord { k, t: params.time(k), x, y: num(cols[2])?, h, m: num(cols[4])?, in_switch });
    }
    Ok(trace)
}

/// Reads the `x` column of a samples CSV. A header row is required; other
/// columns are ignored. An empty file means no samples.
pub fn parse_samples(path: &Path, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    let col = column(&headers, "x", path)?;
    rdr.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| csv_err(path, i + 1, e))?;
            let cell = row.get(col).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(HarnessError::Csv {
                    path: path.to_owned(),
                    row: i + 1,
                    detail: format!("x = {cell:?} is not a finite number"),
                }),
            }
        })
        .collect()
}

fn csv_err(path: &Path, row: usize, e: csv::Error) -> HarnessError {
    HarnessError::Csv { path: path.to_owned(), row, detail: e.to_string() }
}
