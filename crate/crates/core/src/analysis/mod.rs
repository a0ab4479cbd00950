//! Estimators: decay and spectrum fits, trajectory extraction, jump and
//! diffusivity statistics, and the end-to-end defect pipeline.

mod decay_fit;
mod diffusivity;
mod distributions;
mod extract;
mod jumps;
mod lorentzian_fit;
pub mod lsq;
mod pipeline;
mod regime;
mod report;

pub use decay_fit::{fit_decay, DecayFit};
pub use diffusivity::{ensemble_sigma, estimate_diffusivity, Diffusivity};
pub use distributions::{
    bimodality_coefficient, histogram, t1_distributions, BinPolicy, Cut, Histogram,
    BIMODALITY_THRESHOLD,
};
pub use extract::{
    extract_trajectories, extract_trajectory, Extraction, DEFAULT_WINDOW_HALFWIDTH_MHZ,
};
pub use jumps::{
    detect_jumps, jump_statistics, JumpEvent, JumpOptions, JumpStatistics, JumpStatisticsOptions,
};
pub use lorentzian_fit::{
    detect_peaks, fit_lorentzians, FitResult, FittedPeak, LorentzianFitOptions,
};
pub use pipeline::{analyze_dataset, Analysis, AnalysisOptions, DefectAnalysis};
pub use regime::{classify_regime, Regime, RegimeOptions};
pub use report::{write_reports, DefectReport, REPORT_HEADER};

use crate::scalar::Scalar;

/// Median of a non-empty slice (mean of the two middle values for even length).
pub(crate) fn median<T: Scalar>(v: &[T]) -> T {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / T::lit(2.0)
    }
}
