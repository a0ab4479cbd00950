//! Plain numeric CSV tables shared by the dataset, trajectory and report formats.

use std::io::{Read, Write};

use crate::error::{data_err, Error, Result};
use crate::scalar::Scalar;

/// Nine significant digits in scientific notation. Fixed width keeps file
/// digests meaningful across runs.
pub fn fmt_sig9<T: Scalar>(x: T) -> String {
    format!("{:.8e}", x.to_f64_lossy())
}

pub(crate) fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

pub(crate) fn csv_error(source: &str, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => data_err(source, format!("{other:?}")),
    }
}

/// Reads a headered CSV of numbers. The header must match `columns` exactly.
/// Errors name the source, the 1-based line and the offending column.
pub(crate) fn read_numeric_table<R: Read, T: Scalar>(
    reader: R,
    columns: &[&str],
    source: &str,
) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != columns {
        return Err(data_err(
            format!("{source}:1"),
            format!(
                "expected header `{}`, found `{}`",
                columns.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != columns.len() {
            return Err(data_err(
                format!("{source}:{line}"),
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns.len());
        for (field, name) in record.iter().zip(columns) {
            let value: f64 = field.parse().map_err(|_| {
                data_err(
                    format!("{source}:{line} column `{name}`"),
                    format!("cannot parse `{field}` as a number"),
                )
            })?;
            if !value.is_finite() {
                return Err(data_err(
                    format!("{source}:{line} column `{name}`"),
                    "value is not finite",
                ));
            }
            row.push(T::lit(value));
        }
        rows.push(row);
    }
    Ok(rows)
}
