use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csvio::{csv_error, fmt_sig9, writer};
use crate::error::Result;
use crate::scalar::Scalar;

pub const REPORT_HEADER: [&str; 9] = [
    "qubit",
    "defect",
    "g_i_MHz",
    "g_i_ci",
    "Gamma_i_MHz",
    "Gamma_i_ci",
    "g_par_MHz",
    "jump_rate_hr",
    "E_TF_over_kBT",
];

/// One row of the per-defect summary. Optional fields are written as empty
/// CSV cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport<T> {
    pub qubit: String,
    pub defect: String,
    /// GHz; not part of the CSV row but kept for masking and matching.
    pub center_frequency: T,
    pub g_i: T,
    pub g_i_ci: T,
    pub gamma_i: T,
    pub gamma_i_ci: T,
    pub g_parallel: Option<T>,
    /// Absent unless at least one jump was observed.
    pub jump_rate: Option<T>,
    pub e_tf_over_kbt: Option<T>,
}

pub fn write_reports<T: Scalar, W: Write>(reports: &[DefectReport<T>], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(REPORT_HEADER)
        .map_err(|e| csv_error("defect report", e))?;
    let opt = |v: Option<T>| v.map(fmt_sig9).unwrap_or_default();
    for r in reports {
        out.write_record([
            r.qubit.clone(),
            r.defect.clone(),
            fmt_sig9(r.g_i),
            fmt_sig9(r.g_i_ci),
            fmt_sig9(r.gamma_i),
            fmt_sig9(r.gamma_i_ci),
            opt(r.g_parallel),
            opt(r.jump_rate),
            opt(r.e_tf_over_kbt),
        ])
        .map_err(|e| csv_error("defect report", e))?;
    }
    out.flush()?;
    Ok(())
}
