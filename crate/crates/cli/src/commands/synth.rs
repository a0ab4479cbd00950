use std::fs::File;

use tlsdiff::csvio::fmt_sig9;
use tlsdiff::diffusion::run_ensemble;
use tlsdiff::rng::derive_seed;
use tlsdiff::spectra::{
    frequency_grid, protocol_delays, synth_dataset, DatasetNoise, LorentzianPeak, MobilePeak,
    ShotLevelNoise, SpectrumModel, T1Dataset,
};
use tlsdiff::trajectory::{write_trajectories_long, Trajectory};

use super::{csv_bytes, json_bytes};
use crate::config::{load, Motion, SynthConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliError, CliResult, Common};

/// A dataset and the trajectory that moved each peak (zeros for static ones).
pub struct Synthesis {
    pub dataset: T1Dataset<f64>,
    pub truth: Vec<Trajectory<f64>>,
}

pub fn time_stamps(duration_hr: f64, step_hr: f64) -> CliResult<Vec<f64>> {
    if !(step_hr > 0.0) || !(duration_hr >= 0.0) {
        return Err(CliError::Config(
            "time_step_hr must be positive and duration_hr non-negative".into(),
        ));
    }
    let n = (duration_hr / step_hr).round() as usize;
    Ok((0..=n).map(|k| k as f64 * step_hr).collect())
}

pub fn synthesize(cfg: &SynthConfig) -> CliResult<Synthesis> {
    let grid = frequency_grid(
        cfg.freq_start_ghz,
        cfg.freq_stop_ghz,
        cfg.freq_step_mhz / 1e3,
    )?;
    let times = time_stamps(cfg.duration_hr, cfg.time_step_hr)?;
    let peaks = cfg
        .peaks
        .iter()
        .map(|p| LorentzianPeak::new(p.center_ghz, p.g_mhz, p.gamma_mhz))
        .collect::<tlsdiff::Result<Vec<_>>>()?;
    let model = SpectrumModel::new(peaks, cfg.background_gamma_1q)?;

    let n_sim = cfg
        .peaks
        .iter()
        .filter(|p| p.motion == Motion::Simulated)
        .count();
    let mut simulated = if n_sim > 0 {
        run_ensemble(&cfg.simulation, n_sim, derive_seed(cfg.seed, 1))?
    } else {
        Vec::new()
    }
    .into_iter();

    let zeros = Trajectory::new(times.clone(), vec![0.0; times.len()])?;
    let mut mobile = Vec::new();
    let mut truth = Vec::with_capacity(cfg.peaks.len());
    for (i, p) in cfg.peaks.iter().enumerate() {
        let traj = match (&p.trajectory_csv, p.motion) {
            (Some(_), Motion::Simulated) => {
                return Err(CliError::Config(format!(
                    "peak {i}: give either trajectory_csv or motion = \"simulated\", not both"
                )))
            }
            (Some(path), Motion::Static) => {
                let f = File::open(path).map_err(CliError::io(path))?;
                Some(Trajectory::read_csv(f, &path.display().to_string())?)
            }
            (None, Motion::Simulated) => simulated.next(),
            (None, Motion::Static) => None,
        };
        match traj {
            Some(t) => {
                truth.push(t.clone());
                mobile.push(MobilePeak {
                    peak_index: i,
                    trajectory: t,
                });
            }
            None => truth.push(zeros.clone()),
        }
    }

    let noise = DatasetNoise {
        t1_lognormal_sigma: cfg.t1_lognormal_sigma,
        frequency_jitter_mhz: cfg.frequency_jitter_mhz,
        shot_level: cfg.shot_level.then(|| ShotLevelNoise {
            shots: cfg.shots,
            init_fidelity: cfg.init_fidelity,
            readout_fidelity: cfg.readout_fidelity,
            delays: protocol_delays(),
        }),
    };
    let dataset = synth_dataset(
        &model,
        &mobile,
        &grid,
        &times,
        &noise,
        derive_seed(cfg.seed, 0),
    )?;
    Ok(Synthesis { dataset, truth })
}

pub fn run(common: &Common) -> CliResult<RunManifest> {
    let mut cfg: SynthConfig = load(common.config.as_deref(), "synth")?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let Synthesis { dataset, truth } = synthesize(&cfg)?;

    let mut rec = Recorder::start(&common.out, "synth", &cfg, Some(cfg.seed))?;
    rec.write_with("dataset.csv", |w| dataset.write_csv(w))?;
    rec.write("dataset.json", &json_bytes(&dataset.provenance)?)?;
    rec.write(
        "truth_peaks.csv",
        &csv_bytes(
            &["peak", "center_GHz", "g_MHz", "Gamma_MHz", "moving"],
            cfg.peaks.iter().enumerate().map(|(i, p)| {
                let moving = p.motion == Motion::Simulated || p.trajectory_csv.is_some();
                vec![
                    i.to_string(),
                    fmt_sig9(p.center_ghz),
                    fmt_sig9(p.g_mhz),
                    fmt_sig9(p.gamma_mhz),
                    u8::from(moving).to_string(),
                ]
            }),
        ),
    )?;
    if !truth.is_empty() {
        rec.write_with("truth_trajectories.csv", |w| {
            write_trajectories_long(&truth, w)
        })?;
    }
    let summary = serde_json::json!({
        "n_times": dataset.n_times(),
        "n_frequencies": dataset.n_frequencies(),
        "n_peaks": cfg.peaks.len(),
    });
    println!(
        "dataset: {} time stamps x {} frequencies, {} peak(s)",
        dataset.n_times(),
        dataset.n_frequencies(),
        cfg.peaks.len()
    );
    rec.finish(summary)
}
