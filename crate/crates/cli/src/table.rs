//! Numeric CSV tables written with 17 significant digits.

use std::path::Path;

use crate::error::{CliError, Result};

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus rows of numbers; rows are written in order.
pub fn write_numeric(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|v| fmt(*v))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// `metric,value` rows.
pub fn write_metrics<'a>(rows: impl IntoIterator<Item = (&'a str, f64)>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value"]).expect("in-memory write");
    for (name, v) in rows {
        w.write_record([name, &fmt(v)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Reads a numeric CSV whose header must equal `header`; returns the columns.
pub fn read_numeric(text: &str, header: &[&str], source: &Path) -> Result<Vec<Vec<f64>>> {
    let bad = |detail: String| CliError::Data {
        path: source.to_path_buf(),
        detail,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let got = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if got.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(bad(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", i + 1)))?;
            col.push(v);
        }
    }
    Ok(columns)
}

/// Reads `metric,value` rows.
pub fn read_metrics(text: &str, source: &Path) -> Result<Vec<(String, f64)>> {
    let bad = |detail: String| CliError::Data {
        path: source.to_path_buf(),
        detail,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let v = record[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{}` is not a number", &record[1])))?;
        out.push((record[0].to_string(), v));
    }
    Ok(out)
}

/// Sample period of a uniformly spaced time column.
pub fn sample_period(t: &[f64], source: &Path) -> Result<f64> {
    let bad = |detail: String| CliError::Data {
        path: source.to_path_buf(),
        detail,
    };
    if t.len() < 2 {
        return Err(bad(format!("{} rows; need at least 2", t.len())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let uniform = t
        .iter()
        .enumerate()
        .all(|(i, ti)| (ti - (t[0] + i as f64 * dt)).abs() <= 1e-9 * dt.abs().max(t[0].abs()));
    if !(dt > 0.0) || !uniform {
        return Err(bad("time column is not uniformly increasing".into()));
    }
    Ok(dt)
}
