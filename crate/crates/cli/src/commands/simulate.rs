use tlsdiff::analysis::{ensemble_sigma, estimate_diffusivity};
use tlsdiff::csvio::fmt_sig9;
use tlsdiff::diffusion::run_ensemble;
use tlsdiff::trajectory::write_trajectories_long;

use super::csv_bytes;
use crate::config::{load, SimulateConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliError, CliResult, Common};

pub fn run(common: &Common) -> CliResult<RunManifest> {
    let mut cfg: SimulateConfig = load(common.config.as_deref(), "simulate")?;
    if let Some(s) = common.seed {
        cfg.simulation.rng_seed = s;
    }
    if cfg.n_traj == 0 {
        return Err(CliError::Config("n_traj must be at least 1".into()));
    }
    let seed = cfg.simulation.rng_seed;
    let trajectories = run_ensemble(&cfg.simulation, cfg.n_traj, seed)?;

    let mut rec = Recorder::start(&common.out, "simulate", &cfg, Some(seed))?;
    for (k, t) in trajectories.iter().enumerate() {
        rec.write_with(&format!("trajectories/traj_{k:03}.csv"), |w| t.write_csv(w))?;
    }
    rec.write_with("trajectories.csv", |w| {
        write_trajectories_long(&trajectories, w)
    })?;

    let mut summary = serde_json::json!({ "n_traj": cfg.n_traj });
    if trajectories.len() >= 2 {
        let sigma = ensemble_sigma(&trajectories)?;
        rec.write(
            "sigma.csv",
            &csv_bytes(
                &["time_hr", "sigma_MHz"],
                trajectories[0]
                    .times()
                    .iter()
                    .zip(&sigma)
                    .map(|(t, s)| vec![fmt_sig9(*t), fmt_sig9(*s)]),
            ),
        )?;
        let d = estimate_diffusivity(&trajectories, false)?;
        println!("diffusivity D = {:.4} ± {:.4} MHz/sqrt(hr)", d.d, d.stderr);
        summary["diffusivity"] = serde_json::json!(d);
    }
    rec.finish(summary)
}
