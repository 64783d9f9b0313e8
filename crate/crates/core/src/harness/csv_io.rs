use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::samplers::Sample;

/// Reads a rectangular numeric CSV file into a sample.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Sample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file)
}

fn parse_error(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column,
        message: message.into(),
    }
}

/// Parses comma-separated numbers, one observation per line.
///
/// A first line in which no cell is numeric is taken as a header. Rows and
/// columns in errors are 1-based line and field numbers.
pub fn parse_csv<R: Read>(reader: R) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            parse_error(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if width.is_none() && rows == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                line,
                record.len().min(expected) + 1,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(line, j + 1, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, j + 1, format!("`{cell}` is not finite")));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_error(1, 1, "no data rows"));
    }
    Sample::new(rows, width.unwrap_or(0), data)
}

/// Writes a sample as CSV with header `x1,…,xp`.
pub fn write_sample_csv<W: Write>(sample: &Sample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=sample.p()).map(|j| format!("x{j}")).collect();
    let io = |e: csv::Error| Error::Io {
        path: "<csv output>".into(),
        source: e.into(),
    };
    w.write_record(&header).map_err(io)?;
    for row in sample.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })
}
