use serde::{Deserialize, Serialize};

use super::diffusivity::{estimate_diffusivity, Diffusivity};
use super::extract::{extract_trajectories, Extraction, DEFAULT_WINDOW_HALFWIDTH_MHZ};
use super::jumps::{
    detect_jumps, jump_statistics, JumpEvent, JumpOptions, JumpStatistics, JumpStatisticsOptions,
};
use super::lorentzian_fit::{fit_lorentzians, FitResult, FittedPeak, LorentzianFitOptions};
use super::regime::{classify_regime, Regime, RegimeOptions};
use super::report::DefectReport;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectra::{RelaxationSpectrum, T1Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions<T> {
    pub qubit: String,
    pub fit: LorentzianFitOptions<T>,
    /// MHz
    pub window_halfwidth: T,
    /// Spurious lines (GHz) excluded from fitting and reporting.
    pub masks: Vec<T>,
    /// MHz
    pub mask_halfwidth: T,
    pub jumps: JumpOptions<T>,
    pub statistics: JumpStatisticsOptions<T>,
    pub regime: RegimeOptions<T>,
}

impl<T: Scalar> Default for AnalysisOptions<T> {
    fn default() -> Self {
        let jumps = JumpOptions::default();
        Self {
            qubit: "Q1".to_string(),
            fit: LorentzianFitOptions::default(),
            window_halfwidth: T::lit(DEFAULT_WINDOW_HALFWIDTH_MHZ),
            masks: Vec::new(),
            mask_halfwidth: T::lit(5.0),
            jumps,
            statistics: JumpStatisticsOptions::default(),
            regime: RegimeOptions {
                jumps,
                ..RegimeOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectAnalysis<T> {
    pub fitted: FittedPeak<T>,
    pub extraction: Extraction<T>,
    pub jumps: Vec<JumpEvent<T>>,
    pub statistics: JumpStatistics<T>,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis<T> {
    /// Fit of the first time slice, masked lines removed.
    pub fit: FitResult<T>,
    pub defects: Vec<DefectAnalysis<T>>,
    pub reports: Vec<DefectReport<T>>,
    /// From the defects tracked over the whole dataset; absent with fewer than two.
    pub diffusivity: Option<Diffusivity<T>>,
}

impl<T: Scalar> AnalysisOptions<T> {
    fn masked(&self, f: T) -> bool {
        let hw = self.mask_halfwidth / T::lit(1e3);
        self.masks.iter().any(|m| (f - *m).abs() <= hw)
    }
}

/// Fit → extract → jumps → statistics over a whole dataset.
///
/// Defects are found in the first time slice; each is then tracked through
/// the remaining slices from its fitted center.
pub fn analyze_dataset<T: Scalar>(
    dataset: &T1Dataset<T>,
    options: &AnalysisOptions<T>,
) -> Result<Analysis<T>> {
    if dataset.n_times() == 0 || dataset.n_frequencies() == 0 {
        return invalid("dataset is empty");
    }
    if !(options.mask_halfwidth >= T::zero()) {
        return invalid("mask half width must be non-negative");
    }
    let full = dataset.spectrum_at(0)?;
    let keep: Vec<usize> = (0..full.len())
        .filter(|&j| !options.masked(full.frequencies[j]))
        .collect();
    let pick = |v: &[T]| keep.iter().map(|&j| v[j]).collect::<Vec<T>>();
    let spectrum = RelaxationSpectrum::new(
        pick(&full.frequencies),
        pick(&full.relaxation_rates),
        full.rate_errors.as_deref().map(pick),
    )?;
    let mut fit = fit_lorentzians(&spectrum, None, &options.fit)?;
    fit.peaks
        .retain(|p| !options.masked(p.peak.center_frequency));
    let (f_lo, f_hi) = (dataset.frequencies[0], *dataset.frequencies.last().unwrap());
    fit.peaks
        .retain(|p| p.peak.center_frequency >= f_lo && p.peak.center_frequency <= f_hi);

    let centers: Vec<T> = fit.peaks.iter().map(|p| p.peak.center_frequency).collect();
    let extractions = if centers.is_empty() {
        Vec::new()
    } else {
        extract_trajectories(dataset, &centers, options.window_halfwidth)?
    };

    let mut defects = Vec::with_capacity(extractions.len());
    let mut reports = Vec::with_capacity(extractions.len());
    for (k, (fitted, extraction)) in fit.peaks.iter().zip(extractions).enumerate() {
        let traj = &extraction.trajectory;
        let jumps = detect_jumps(traj, &options.jumps)?;
        let total = traj.duration();
        let statistics = if total > T::zero() {
            jump_statistics(&jumps, total, &options.statistics)?
        } else {
            JumpStatistics {
                count: 0,
                mean_rate: T::zero(),
                g_parallel: None,
                upper_dwell: None,
                lower_dwell: None,
                e_tf_over_kbt: None,
            }
        };
        let regime = classify_regime(traj, &options.regime)?;
        reports.push(DefectReport {
            qubit: options.qubit.clone(),
            defect: (k + 1).to_string(),
            center_frequency: fitted.peak.center_frequency,
            g_i: fitted.peak.coupling_g,
            g_i_ci: fitted.coupling_ci,
            gamma_i: fitted.peak.decoherence_gamma,
            gamma_i_ci: fitted.gamma_ci,
            g_parallel: statistics.g_parallel,
            jump_rate: (statistics.count > 0).then_some(statistics.mean_rate),
            e_tf_over_kbt: statistics.e_tf_over_kbt,
        });
        defects.push(DefectAnalysis {
            fitted: *fitted,
            extraction,
            jumps,
            statistics,
            regime,
        });
    }

    let complete: Vec<_> = defects
        .iter()
        .filter(|d| !d.extraction.truncated)
        .map(|d| d.extraction.trajectory.clone())
        .collect();
    let diffusivity = if complete.len() >= 2 && dataset.n_times() >= 3 {
        Some(estimate_diffusivity(&complete, false)?)
    } else {
        None
    };
    Ok(Analysis {
        fit,
        defects,
        reports,
        diffusivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{
        frequency_grid, synth_dataset, DatasetNoise, LorentzianPeak, SpectrumModel,
    };

    fn two_peak_dataset() -> T1Dataset<f64> {
        let grid = frequency_grid(5.5, 5.7, 0.001).unwrap();
        let times: Vec<f64> = (0..9).map(|k| k as f64 * 0.25).collect();
        let peaks = vec![
            LorentzianPeak::new(5.55, 0.25, 5.0).unwrap(),
            LorentzianPeak::new(5.6, 0.4, 3.0).unwrap(),
        ];
        let model = SpectrumModel::new(peaks, 0.02).unwrap();
        synth_dataset(&model, &[], &grid, &times, &DatasetNoise::default(), 0).unwrap()
    }

    #[test]
    fn static_peaks_are_reported() {
        let a = analyze_dataset(&two_peak_dataset(), &AnalysisOptions::default()).unwrap();
        assert_eq!(a.reports.len(), 2);
        assert!((a.reports[0].g_i - 0.25).abs() < 0.0025);
        assert!((a.reports[1].gamma_i - 3.0).abs() < 0.03);
        assert!(a
            .reports
            .iter()
            .all(|r| r.jump_rate.is_none() && r.e_tf_over_kbt.is_none()));
        assert_eq!(a.diffusivity.unwrap().d, 0.0);
    }

    #[test]
    fn masked_line_is_not_reported() {
        let opts = AnalysisOptions {
            masks: vec![5.6],
            ..AnalysisOptions::default()
        };
        let a = analyze_dataset(&two_peak_dataset(), &opts).unwrap();
        assert_eq!(a.reports.len(), 1);
        assert!((a.reports[0].center_frequency - 5.55).abs() < 1e-4);
    }
}
