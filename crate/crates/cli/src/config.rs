//! Per-command TOML configs. Keys are flat and named after the library
//! fields; every table rejects unknown keys so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tlsdiff::diffusion::SimConfig;

use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

/// Reads `path` as TOML, or as a manifest of an earlier `command` run whose
/// resolved config is replayed. Without a path the defaults apply.
pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> CliResult<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}: not a run manifest: {e}", path.display()))
        })?;
        if manifest.command != command {
            return Err(CliError::Config(format!(
                "{} records a `{}` run, not `{command}`",
                path.display(),
                manifest.command
            )));
        }
        return serde_json::from_value(manifest.config)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    #[default]
    Static,
    /// Driven by a freshly simulated spectral-diffusion trajectory.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakSpec {
    pub center_ghz: f64,
    pub g_mhz: f64,
    pub gamma_mhz: f64,
    #[serde(default)]
    pub motion: Motion,
    /// `time_hr,delta_E_MHz` file moving this peak; excludes `motion = "simulated"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub freq_start_ghz: f64,
    pub freq_stop_ghz: f64,
    pub freq_step_mhz: f64,
    pub duration_hr: f64,
    pub time_step_hr: f64,
    /// Γ_1Q, μs⁻¹
    pub background_gamma_1q: f64,
    pub t1_lognormal_sigma: f64,
    pub frequency_jitter_mhz: f64,
    /// Simulate every grid point as a shot-noise decay curve and refit it.
    pub shot_level: bool,
    pub shots: u64,
    pub init_fidelity: f64,
    pub readout_fidelity: f64,
    pub peaks: Vec<PeakSpec>,
    /// Parameters for `motion = "simulated"` peaks.
    pub simulation: SimConfig<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            freq_start_ghz: 5.5,
            freq_stop_ghz: 5.9,
            freq_step_mhz: 1.0,
            duration_hr: 20.0,
            time_step_hr: 0.25,
            background_gamma_1q: tlsdiff::spectra::DEFAULT_BACKGROUND_RATE,
            t1_lognormal_sigma: 0.0,
            frequency_jitter_mhz: 0.0,
            shot_level: false,
            shots: 2000,
            init_fidelity: 0.99,
            readout_fidelity: 0.95,
            peaks: Vec::new(),
            simulation: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n_traj: usize,
    /// Master seed is `simulation.rng_seed`.
    pub simulation: SimConfig<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_traj: 13,
            simulation: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// GHz⁻¹·μm⁻³
    pub densities: Vec<f64>,
    pub reps: usize,
    pub n_traj: usize,
    /// Base parameters; `tf_density` is overridden per sweep point and
    /// `rng_seed` is the master seed.
    pub simulation: SimConfig<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            densities: vec![1e2, 1e3, 1e4],
            reps: 300,
            n_traj: 13,
            simulation: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub dataset: Option<PathBuf>,
    pub qubit: String,
    pub window_halfwidth_mhz: f64,
    /// GHz
    pub masks: Vec<f64>,
    pub mask_halfwidth_mhz: f64,
    pub detection_factor: f64,
    pub qubit_dephasing_mhz: f64,
    pub min_jump_mhz: f64,
    pub kappa: f64,
    pub min_jumps_for_energy: usize,
    pub level_tolerance: f64,
    pub telegraphic_fraction: f64,
    pub min_variation_mhz: f64,
    /// Histogram bins per cut; Sturges' rule when absent.
    pub histogram_bins: Option<usize>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        use tlsdiff::analysis::{AnalysisOptions, DEFAULT_WINDOW_HALFWIDTH_MHZ};
        let d = AnalysisOptions::<f64>::default();
        Self {
            dataset: None,
            qubit: d.qubit,
            window_halfwidth_mhz: DEFAULT_WINDOW_HALFWIDTH_MHZ,
            masks: Vec::new(),
            mask_halfwidth_mhz: d.mask_halfwidth,
            detection_factor: d.fit.detection_factor,
            qubit_dephasing_mhz: d.fit.qubit_dephasing,
            min_jump_mhz: d.jumps.min_jump,
            kappa: d.jumps.kappa,
            min_jumps_for_energy: d.statistics.min_jumps_for_energy,
            level_tolerance: d.statistics.level_tolerance,
            telegraphic_fraction: d.regime.telegraphic_fraction,
            min_variation_mhz: d.regime.min_variation,
            histogram_bins: None,
        }
    }
}

impl AnalyzeConfig {
    pub fn options(&self) -> tlsdiff::analysis::AnalysisOptions<f64> {
        use tlsdiff::analysis::*;
        let jumps = JumpOptions {
            min_jump: self.min_jump_mhz,
            kappa: self.kappa,
        };
        AnalysisOptions {
            qubit: self.qubit.clone(),
            fit: LorentzianFitOptions {
                detection_factor: self.detection_factor,
                qubit_dephasing: self.qubit_dephasing_mhz,
                ..LorentzianFitOptions::default()
            },
            window_halfwidth: self.window_halfwidth_mhz,
            masks: self.masks.clone(),
            mask_halfwidth: self.mask_halfwidth_mhz,
            jumps,
            statistics: JumpStatisticsOptions {
                min_jumps_for_energy: self.min_jumps_for_energy,
                level_tolerance: self.level_tolerance,
            },
            regime: RegimeOptions {
                jumps,
                telegraphic_fraction: self.telegraphic_fraction,
                min_variation: self.min_variation_mhz,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {}
