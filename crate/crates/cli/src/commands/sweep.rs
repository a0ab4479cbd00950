use rayon::prelude::*;
use serde::Serialize;
use tlsdiff::analysis::estimate_diffusivity;
use tlsdiff::csvio::fmt_sig9;
use tlsdiff::diffusion::{run_ensemble, SimConfig, MAX_NONINTERACTING_DENSITY};
use tlsdiff::rng::derive_seed;

use super::csv_bytes;
use crate::config::{load, SweepConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliError, CliResult, Common};

/// Trajectories whose largest excursion stays below this are unresolvable
/// in measured data, MHz.
pub const RESOLUTION_MHZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub density: f64,
    /// One diffusivity per repetition, in repetition order.
    pub samples: Vec<f64>,
    /// Share of all simulated trajectories with max |ΔE| below [`RESOLUTION_MHZ`].
    pub unresolved_fraction: f64,
}

impl DensityPoint {
    pub fn quantile(&self, q: f64) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let pos = q * (s.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn validate(cfg: &SweepConfig) -> CliResult<()> {
    if cfg.densities.is_empty() {
        return Err(CliError::Config("densities must not be empty".into()));
    }
    for d in &cfg.densities {
        if !(*d > 0.0 && *d <= MAX_NONINTERACTING_DENSITY) {
            return Err(CliError::Config(format!(
                "density {d} is outside (0, {MAX_NONINTERACTING_DENSITY:e}]; above the ceiling the mean \
                 fluctuator spacing drops to ~25 nm and fluctuator-fluctuator interactions, which the \
                 simulator ignores, can no longer be neglected"
            )));
        }
    }
    if cfg.reps == 0 || cfg.n_traj < 2 {
        return Err(CliError::Config("need reps >= 1 and n_traj >= 2".into()));
    }
    cfg.simulation.validate()?;
    Ok(())
}

/// Repetition `r` at density index `i` draws its ensemble from
/// `derive_seed(derive_seed(master, i), r)`.
pub fn sweep(cfg: &SweepConfig) -> CliResult<Vec<DensityPoint>> {
    validate(cfg)?;
    let master = cfg.simulation.rng_seed;
    cfg.densities
        .iter()
        .enumerate()
        .map(|(i, &density)| {
            let sim = SimConfig {
                tf_density: density,
                ..cfg.simulation.clone()
            };
            let density_seed = derive_seed(master, i as u64);
            let reps: Vec<(f64, usize)> = (0..cfg.reps as u64)
                .into_par_iter()
                .map(|r| {
                    let trajs = run_ensemble(&sim, cfg.n_traj, derive_seed(density_seed, r))?;
                    let small = trajs
                        .iter()
                        .filter(|t| t.max_abs() < RESOLUTION_MHZ)
                        .count();
                    Ok((estimate_diffusivity(&trajs, false)?.d, small))
                })
                .collect::<tlsdiff::Result<_>>()?;
            let small: usize = reps.iter().map(|r| r.1).sum();
            Ok(DensityPoint {
                density,
                samples: reps.iter().map(|r| r.0).collect(),
                unresolved_fraction: small as f64 / (cfg.reps * cfg.n_traj) as f64,
            })
        })
        .collect()
}

pub fn run(common: &Common) -> CliResult<RunManifest> {
    let mut cfg: SweepConfig = load(common.config.as_deref(), "sweep-density")?;
    if let Some(s) = common.seed {
        cfg.simulation.rng_seed = s;
    }
    let points = sweep(&cfg)?;

    let mut rec = Recorder::start(
        &common.out,
        "sweep-density",
        &cfg,
        Some(cfg.simulation.rng_seed),
    )?;
    rec.write(
        "sweep.csv",
        &csv_bytes(
            &["density", "rep", "D_MHz_per_sqrt_hr"],
            points.iter().flat_map(|p| {
                p.samples
                    .iter()
                    .enumerate()
                    .map(|(r, d)| vec![fmt_sig9(p.density), r.to_string(), fmt_sig9(*d)])
            }),
        ),
    )?;
    rec.write(
        "sweep_summary.csv",
        &csv_bytes(
            &[
                "density",
                "median_D",
                "q25_D",
                "q75_D",
                "unresolved_fraction",
            ],
            points.iter().map(|p| {
                vec![
                    fmt_sig9(p.density),
                    fmt_sig9(p.median()),
                    fmt_sig9(p.quantile(0.25)),
                    fmt_sig9(p.quantile(0.75)),
                    fmt_sig9(p.unresolved_fraction),
                ]
            }),
        ),
    )?;
    println!(
        "{:>10} {:>10} {:>10} {:>10} {:>12}",
        "density", "median D", "q25", "q75", "max|dE|<1MHz"
    );
    for p in &points {
        println!(
            "{:>10.3e} {:>10.4} {:>10.4} {:>10.4} {:>12.3}",
            p.density,
            p.median(),
            p.quantile(0.25),
            p.quantile(0.75),
            p.unresolved_fraction
        );
    }
    let summary = serde_json::json!(points
        .iter()
        .map(|p| serde_json::json!({
            "density": p.density,
            "median_D": p.median(),
            "unresolved_fraction": p.unresolved_fraction,
        }))
        .collect::<Vec<_>>());
    rec.finish(summary)
}
