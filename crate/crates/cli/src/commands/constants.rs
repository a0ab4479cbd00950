use serde::Serialize;
use tlsdiff::physmodel::{
    boltzmann_factor, dipole_dipole_gzz, qubit_defect_coupling, DipoleMoment,
};
use tlsdiff::spectra::half_wave_spacing;

use super::csv_bytes;
use crate::config::{load, ConstantsConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliResult, Common};

const INCH: f64 = 0.0254;

/// A closed-form value evaluated at the quoted inputs next to the quoted figure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub name: &'static str,
    pub computed: f64,
    pub quoted: f64,
    pub unit: &'static str,
    pub inputs: &'static str,
}

impl Anchor {
    /// `max(computed/quoted, quoted/computed)`.
    pub fn ratio(&self) -> f64 {
        let r = (self.computed / self.quoted).abs();
        r.max(r.recip())
    }
}

pub fn anchors() -> tlsdiff::Result<Vec<Anchor>> {
    let coupling = |x: f64| qubit_defect_coupling(1.0, x, 5.5, 75e-15);
    let p = DipoleMoment::new(1.0_f64, [0.0, 0.0, 1.0])?;
    Ok(vec![
        Anchor {
            name: "control_line_spacing",
            computed: half_wave_spacing(23.0 * INCH, 2.1)? * 1e3,
            quoted: 177.0,
            unit: "MHz",
            inputs: "L = 23 in, eps_r = 2.1",
        },
        Anchor {
            name: "boltzmann_factor",
            computed: boltzmann_factor(5.5, 0.015)?,
            quoted: 1e-8,
            unit: "",
            inputs: "E/h = 5.5 GHz, T = 15 mK",
        },
        Anchor {
            name: "coupling_capacitor",
            computed: coupling(20e-6)?,
            quoted: 0.010,
            unit: "MHz",
            inputs: "d = 1 A, C_q = 75 fF, f = 5.5 GHz, x = 20 um",
        },
        Anchor {
            name: "coupling_near_junction",
            computed: coupling(1e-6)?,
            quoted: 0.250,
            unit: "MHz",
            inputs: "d = 1 A, C_q = 75 fF, f = 5.5 GHz, x = 1 um",
        },
        Anchor {
            name: "coupling_in_junction",
            computed: coupling(2e-9)?,
            quoted: 100.0,
            unit: "MHz",
            inputs: "d = 1 A, C_q = 75 fF, f = 5.5 GHz, x = 2 nm",
        },
        Anchor {
            name: "collinear_dipole_gzz",
            computed: dipole_dipole_gzz(&p, &p, [0.0, 0.0, 35.0], 10.0)?.abs(),
            quoted: 30.0,
            unit: "MHz",
            inputs: "two collinear 1 eA dipoles, r = 35 nm, eps_r = 10",
        },
    ])
}

pub fn run(common: &Common) -> CliResult<RunManifest> {
    let cfg: ConstantsConfig = load(common.config.as_deref(), "constants")?;
    let rows = anchors()?;
    println!(
        "{:<24} {:>14} {:>12} {:>6}  inputs",
        "quantity", "computed", "quoted", "unit"
    );
    for a in &rows {
        println!(
            "{:<24} {:>14.4e} {:>12.3e} {:>6}  {}",
            a.name, a.computed, a.quoted, a.unit, a.inputs
        );
    }
    let mut rec = Recorder::start(&common.out, "constants", &cfg, None)?;
    rec.write(
        "constants.csv",
        &csv_bytes(
            &["quantity", "computed", "quoted", "unit"],
            rows.iter().map(|a| {
                vec![
                    a.name.to_string(),
                    tlsdiff::csvio::fmt_sig9(a.computed),
                    tlsdiff::csvio::fmt_sig9(a.quoted),
                    a.unit.to_string(),
                ]
            }),
        ),
    )?;
    rec.finish(serde_json::to_value(&rows).expect("anchors serialize"))
}
