use serde::{Deserialize, Serialize};

use super::lsq::{levenberg_marquardt, LeastSquaresProblem, LmOptions};
use super::median;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectra::{
    LorentzianPeak, RegimeValidity, RelaxationSpectrum, DEFAULT_QUBIT_DEPHASING_MHZ,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFitOptions<T> {
    /// A local maximum seeds a peak when its rate exceeds this multiple of the
    /// background estimate.
    pub detection_factor: T,
    pub max_iterations: usize,
    /// Γ_Q used for the regime check, MHz.
    pub qubit_dephasing: T,
}

impl<T: Scalar> Default for LorentzianFitOptions<T> {
    fn default() -> Self {
        Self {
            detection_factor: T::lit(3.0),
            max_iterations: 400,
            qubit_dephasing: T::lit(DEFAULT_QUBIT_DEPHASING_MHZ),
        }
    }
}

/// A fitted peak with 68% (one-sigma) confidence half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedPeak<T> {
    pub peak: LorentzianPeak<T>,
    /// GHz
    pub center_ci: T,
    /// MHz
    pub coupling_ci: T,
    /// MHz
    pub gamma_ci: T,
    pub regime: RegimeValidity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    /// Sorted by center frequency.
    pub peaks: Vec<FittedPeak<T>>,
    /// μs⁻¹
    pub background_gamma_1q: T,
    pub background_ci: T,
    /// Weighted residual sum of squares (χ² when rate errors are supplied).
    pub residual_norm: T,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn model(&self) -> crate::spectra::SpectrumModel<T> {
        crate::spectra::SpectrumModel {
            peaks: self.peaks.iter().map(|p| p.peak).collect(),
            background_gamma_1q: self.background_gamma_1q,
            ..Default::default()
        }
    }
}

struct MultiLorentzian<'a, T> {
    f: &'a [T],
    y: &'a [T],
    /// 1/σ per point
    w: Option<Vec<T>>,
    n_peaks: usize,
}

// Parameter layout: [f_1, ln g_1, ln Γ_1, ..., f_n, ln g_n, ln Γ_n, ln Γ_1Q].
impl<T: Scalar> MultiLorentzian<'_, T> {
    fn weight(&self, k: usize) -> T {
        self.w.as_ref().map_or(T::one(), |w| w[k])
    }
}

impl<T: Scalar> LeastSquaresProblem<T> for MultiLorentzian<'_, T> {
    fn n_params(&self) -> usize {
        3 * self.n_peaks + 1
    }

    fn n_residuals(&self) -> usize {
        self.f.len()
    }

    fn residuals(&self, p: &[T], out: &mut [T]) {
        let bg = p[3 * self.n_peaks].exp();
        let two_pi = T::lit(2.0) * T::PI();
        for (k, &f) in self.f.iter().enumerate() {
            let mut model = bg;
            for i in 0..self.n_peaks {
                let (fi, g, gamma) = (p[3 * i], p[3 * i + 1].exp(), p[3 * i + 2].exp());
                let d = (fi - f) * T::lit(1e3);
                let h = gamma / two_pi;
                model = model + T::lit(2.0) * g * g * gamma / (h * h + d * d);
            }
            out[k] = (model - self.y[k]) * self.weight(k);
        }
    }

    fn jacobian(&self, p: &[T], out: &mut [T]) {
        let np = self.n_params();
        let bg = p[3 * self.n_peaks].exp();
        let two_pi = T::lit(2.0) * T::PI();
        for (k, &f) in self.f.iter().enumerate() {
            let w = self.weight(k);
            let row = &mut out[k * np..(k + 1) * np];
            for i in 0..self.n_peaks {
                let (fi, g, gamma) = (p[3 * i], p[3 * i + 1].exp(), p[3 * i + 2].exp());
                let d = (fi - f) * T::lit(1e3);
                let h = gamma / two_pi;
                let den = h * h + d * d;
                let l = T::lit(2.0) * g * g * gamma / den;
                row[3 * i] = -l * T::lit(2.0) * d * T::lit(1e3) / den * w;
                row[3 * i + 1] = T::lit(2.0) * l * w;
                row[3 * i + 2] = l * (d * d - h * h) / den * w;
            }
            row[3 * self.n_peaks] = bg * w;
        }
    }
}

/// Local maxima of the rate exceeding `factor ×` the median rate, with initial
/// `(g, Γ)` read off the sampled height and half-maximum width.
pub fn detect_peaks<T: Scalar>(
    spectrum: &RelaxationSpectrum<T>,
    factor: T,
) -> (Vec<LorentzianPeak<T>>, T) {
    let (f, y) = (&spectrum.frequencies, &spectrum.relaxation_rates);
    let n = f.len();
    let background = median(y);
    let mut peaks = Vec::new();
    if n < 3 {
        return (peaks, background);
    }
    let step_mhz = (f[n - 1] - f[0]) / T::of_usize(n - 1) * T::lit(1e3);
    let mut k = 1;
    while k + 1 < n {
        let is_max = y[k] > y[k - 1] && y[k] >= y[k + 1];
        if !is_max || !(y[k] > factor * background) {
            k += 1;
            continue;
        }
        let height = y[k] - background;
        let half = background + height / T::lit(2.0);
        let cross = |j_in: usize, j_out: usize| {
            // linear interpolation of the half-maximum crossing between samples
            let (yi, yo) = (y[j_in], y[j_out]);
            let frac = if yi != yo {
                (yi - half) / (yi - yo)
            } else {
                T::lit(0.5)
            };
            f[j_in] + (f[j_out] - f[j_in]) * frac
        };
        let mut l = k;
        while l > 0 && y[l - 1] > half {
            l -= 1;
        }
        let left = if l > 0 { cross(l, l - 1) } else { f[0] };
        let mut r = k;
        while r + 1 < n && y[r + 1] > half {
            r += 1;
        }
        let right = if r + 1 < n { cross(r, r + 1) } else { f[n - 1] };
        let fwhm = ((right - left) * T::lit(1e3)).max(step_mhz / T::lit(2.0));
        let gamma = T::PI() * fwhm;
        let g = (height * gamma / (T::lit(8.0) * T::PI() * T::PI())).sqrt();
        peaks.push(LorentzianPeak {
            center_frequency: f[k],
            coupling_g: g,
            decoherence_gamma: gamma,
            relaxation_gamma_1: None,
        });
        k = r + 1;
    }
    (peaks, background)
}

/// Nonlinear least-squares fit of the sum-of-Lorentzians relaxation model to a
/// `1/T1` trace.
///
/// Couplings, widths and the background are optimised in log space, which
/// keeps them positive. When `hints` is `None`, peaks are seeded by
/// [`detect_peaks`]. Residuals are weighted by `1/σ` when the spectrum carries
/// rate errors, in which case the covariance is `(JᵀWJ)⁻¹`; otherwise it is
/// scaled by the reduced residual variance.
pub fn fit_lorentzians<T: Scalar>(
    spectrum: &RelaxationSpectrum<T>,
    hints: Option<&[LorentzianPeak<T>]>,
    options: &LorentzianFitOptions<T>,
) -> Result<FitResult<T>> {
    let (init_peaks, bg_guess) = match hints {
        Some(h) => (h.to_vec(), median(&spectrum.relaxation_rates)),
        None => detect_peaks(spectrum, options.detection_factor),
    };
    let n_peaks = init_peaks.len();
    let m = spectrum.len();
    if m < 3 * n_peaks + 1 {
        return invalid(format!(
            "{m} points cannot constrain {n_peaks} peaks (need at least {})",
            3 * n_peaks + 1
        ));
    }
    let weights = match &spectrum.rate_errors {
        Some(err) => {
            if err.iter().any(|e| !(*e > T::zero()) || !e.is_finite()) {
                return invalid("rate errors must be positive and finite");
            }
            Some(err.iter().map(|e| e.recip()).collect::<Vec<T>>())
        }
        None => None,
    };
    let weighted = weights.is_some();

    if n_peaks == 0 {
        return Ok(background_only(spectrum, weights.as_deref()));
    }

    let mut init = Vec::with_capacity(3 * n_peaks + 1);
    for p in &init_peaks {
        p.validate()?;
        init.extend([
            p.center_frequency,
            p.coupling_g.ln(),
            p.decoherence_gamma.ln(),
        ]);
    }
    init.push(bg_guess.max(T::lit(1e-12)).ln());

    let problem = MultiLorentzian {
        f: &spectrum.frequencies,
        y: &spectrum.relaxation_rates,
        w: weights,
        n_peaks,
    };
    let lm = LmOptions {
        max_iterations: options.max_iterations,
        ..LmOptions::default()
    };
    let rep = levenberg_marquardt(&problem, &init, &lm);
    let dof = m - (3 * n_peaks + 1);
    let cov = if weighted {
        rep.unscaled_covariance()
    } else {
        rep.scaled_covariance(dof)
    };
    let np = 3 * n_peaks + 1;
    let sd = |i: usize| {
        cov.as_ref()
            .map_or(T::infinity(), |c| c[i * np + i].max(T::zero()).sqrt())
    };

    let background = rep.params[3 * n_peaks].exp();
    let mut peaks: Vec<FittedPeak<T>> = (0..n_peaks)
        .map(|i| {
            let g = rep.params[3 * i + 1].exp();
            let gamma = rep.params[3 * i + 2].exp();
            let peak = LorentzianPeak {
                center_frequency: rep.params[3 * i],
                coupling_g: g,
                decoherence_gamma: gamma,
                relaxation_gamma_1: None,
            };
            FittedPeak {
                peak,
                center_ci: sd(3 * i),
                // delta method through the log parametrisation
                coupling_ci: g * sd(3 * i + 1),
                gamma_ci: gamma * sd(3 * i + 2),
                regime: peak.regime(background, options.qubit_dephasing),
            }
        })
        .collect();
    peaks.sort_by(|a, b| {
        a.peak
            .center_frequency
            .partial_cmp(&b.peak.center_frequency)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(FitResult {
        peaks,
        background_gamma_1q: background,
        background_ci: background * sd(3 * n_peaks),
        residual_norm: rep.rss,
        dof,
        converged: rep.converged,
        iterations: rep.iterations,
    })
}

fn background_only<T: Scalar>(
    spectrum: &RelaxationSpectrum<T>,
    weights: Option<&[T]>,
) -> FitResult<T> {
    let y = &spectrum.relaxation_rates;
    let m = y.len();
    let w2: Vec<T> = match weights {
        Some(w) => w.iter().map(|v| *v * *v).collect(),
        None => vec![T::one(); m],
    };
    let sw: T = w2.iter().copied().sum();
    let mean = y.iter().zip(&w2).map(|(a, b)| *a * *b).sum::<T>() / sw;
    let rss: T = y
        .iter()
        .zip(&w2)
        .map(|(a, b)| (*a - mean).powi(2) * *b)
        .sum();
    let dof = m.saturating_sub(1);
    let ci = if weights.is_some() {
        sw.recip().sqrt()
    } else if dof > 0 {
        (rss / T::of_usize(dof) / T::of_usize(m)).sqrt()
    } else {
        T::infinity()
    };
    FitResult {
        peaks: Vec::new(),
        background_gamma_1q: mean,
        background_ci: ci,
        residual_norm: rss,
        dof,
        converged: true,
        iterations: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{frequency_grid, synth_spectrum, SpectrumModel};

    fn grid() -> Vec<f64> {
        frequency_grid(5.55, 5.95, 0.001).unwrap()
    }

    #[test]
    fn flat_background_has_no_peaks() {
        let s = synth_spectrum(&SpectrumModel::new(vec![], 0.02).unwrap(), &grid()).unwrap();
        let fit = fit_lorentzians(&s, None, &Default::default()).unwrap();
        assert!(fit.peaks.is_empty());
        assert!((fit.background_gamma_1q - 0.02).abs() < 1e-15);
    }

    #[test]
    fn single_peak_noiseless_round_trip() {
        let truth = LorentzianPeak::new(5.75, 0.25, 5.0).unwrap();
        let s = synth_spectrum(&SpectrumModel::new(vec![truth], 0.02).unwrap(), &grid()).unwrap();
        let fit = fit_lorentzians(&s, None, &Default::default()).unwrap();
        assert_eq!(fit.peaks.len(), 1);
        let p = fit.peaks[0].peak;
        assert!((p.center_frequency - 5.75).abs() < 1e-6);
        assert!((p.coupling_g - 0.25).abs() / 0.25 < 0.01, "{p:?}");
        assert!((p.decoherence_gamma - 5.0).abs() / 5.0 < 0.01, "{p:?}");
        assert!((fit.background_gamma_1q - 0.02).abs() / 0.02 < 0.01);
        assert!(fit.converged);
    }

    #[test]
    fn two_separated_peaks() {
        // widths Γ/π ≈ 2.5 and 3.2 MHz, separation 100 MHz
        let truth = vec![
            LorentzianPeak::new(5.70, 0.30, 8.0).unwrap(),
            LorentzianPeak::new(5.80, 0.20, 10.0).unwrap(),
        ];
        let s = synth_spectrum(&SpectrumModel::new(truth.clone(), 0.02).unwrap(), &grid()).unwrap();
        let fit = fit_lorentzians(&s, None, &Default::default()).unwrap();
        assert_eq!(fit.peaks.len(), 2);
        for (fp, t) in fit.peaks.iter().zip(&truth) {
            assert!((fp.peak.coupling_g - t.coupling_g).abs() / t.coupling_g < 0.02);
            assert!(
                (fp.peak.decoherence_gamma - t.decoherence_gamma).abs() / t.decoherence_gamma
                    < 0.02
            );
        }
    }

    #[test]
    fn hints_are_used() {
        let truth = LorentzianPeak::new(5.75, 0.25, 5.0).unwrap();
        let s = synth_spectrum(&SpectrumModel::new(vec![truth], 0.02).unwrap(), &grid()).unwrap();
        let hint = LorentzianPeak::new(5.7502, 0.2, 6.0).unwrap();
        let fit = fit_lorentzians(&s, Some(&[hint]), &Default::default()).unwrap();
        assert!((fit.peaks[0].peak.coupling_g - 0.25).abs() < 1e-4);
    }

    #[test]
    fn too_few_points_for_peaks() {
        let s =
            RelaxationSpectrum::new(vec![5.0, 5.001, 5.002], vec![0.02, 1.0, 0.02], None).unwrap();
        let hint = LorentzianPeak::new(5.001, 0.2, 6.0).unwrap();
        assert!(fit_lorentzians(&s, Some(&[hint]), &Default::default()).is_err());
    }

    #[test]
    fn detection_ignores_small_bumps() {
        let truth = vec![
            LorentzianPeak::new(5.70, 0.30, 8.0).unwrap(),
            LorentzianPeak::new(5.80, 0.02, 8.0).unwrap(),
        ];
        let s = synth_spectrum(&SpectrumModel::new(truth, 0.02).unwrap(), &grid()).unwrap();
        let (found, bg) = detect_peaks(&s, 3.0);
        assert_eq!(found.len(), 1);
        assert!((found[0].center_frequency - 5.70).abs() < 1e-9);
        assert!((bg - 0.02).abs() < 0.01);
    }
}
