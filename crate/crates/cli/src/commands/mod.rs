pub mod analyze;
pub mod constants;
pub mod simulate;
pub mod sweep;
pub mod synth;

use std::io::Write;

use crate::CliError;

/// Header plus pre-formatted rows as a CSV byte buffer.
pub(crate) fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", header.join(",")).expect("write to Vec");
    for row in rows {
        writeln!(buf, "{}", row.join(",")).expect("write to Vec");
    }
    buf
}

pub(crate) fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(format!("serialization: {e}")))
}
