//! Forward model for qubit energy relaxation: the sum-of-Lorentzians relaxation
//! spectrum, periodic control-line modes, shot-noise-limited decay curves and
//! full time-resolved T1 datasets.

mod dataset;
mod decay;

pub use dataset::{
    synth_dataset, DatasetNoise, DatasetProvenance, MobilePeak, ShotLevelNoise, T1Dataset,
};
pub use decay::{log_spaced_delays, protocol_delays, synth_decay, synth_decay_with, DecayCurve};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::physmodel::CODATA;
use crate::scalar::Scalar;

/// Default qubit contribution to every resonance width, MHz.
pub const DEFAULT_QUBIT_DEPHASING_MHZ: f64 = 0.70;
/// Default background relaxation rate, μs⁻¹ (T1 = 50 μs).
pub const DEFAULT_BACKGROUND_RATE: f64 = 0.02;

/// Outcome of checking the coupling regime `Γ_{1,i} > 2π g_i/h > Γ_{1,Q}` in
/// which the Lorentzian relaxation model holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeValidity {
    Valid,
    Violated,
    /// Only the checkable half of the inequality holds; `Γ_{1,i}` is unknown.
    Plausible,
}

/// One relaxation resonance.
///
/// `decoherence_gamma` is the total decoherence rate Γ_i as an angular rate in
/// MHz; the corresponding half width at half maximum in ordinary frequency is
/// `Γ_i / 2π` MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianPeak<T> {
    /// f_i, GHz
    pub center_frequency: T,
    /// g_i/h, MHz
    pub coupling_g: T,
    /// Γ_i, MHz
    pub decoherence_gamma: T,
    /// Γ_{1,i} of the coupled system when it is known, MHz.
    pub relaxation_gamma_1: Option<T>,
}

impl<T: Scalar> LorentzianPeak<T> {
    pub fn new(center_frequency: T, coupling_g: T, decoherence_gamma: T) -> Result<Self> {
        let p = Self {
            center_frequency,
            coupling_g,
            decoherence_gamma,
            relaxation_gamma_1: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center_frequency.is_finite() {
            return invalid("peak center frequency must be finite");
        }
        if !(self.coupling_g > T::zero()) || !self.coupling_g.is_finite() {
            return invalid(format!(
                "peak coupling must be positive, got {}",
                self.coupling_g
            ));
        }
        if !(self.decoherence_gamma > T::zero()) || !self.decoherence_gamma.is_finite() {
            return invalid(format!(
                "peak decoherence rate must be positive, got {}",
                self.decoherence_gamma
            ));
        }
        Ok(())
    }

    /// Excess relaxation rate (μs⁻¹) contributed at qubit frequency `f` (GHz).
    pub fn excess_rate(&self, f: T) -> T {
        let detuning_mhz = (self.center_frequency - f) * T::lit(1e3);
        let hw = self.half_width_mhz();
        T::lit(2.0) * self.coupling_g.powi(2) * self.decoherence_gamma
            / (hw * hw + detuning_mhz * detuning_mhz)
    }

    /// `8π² g² / Γ`, the excess rate on resonance.
    pub fn peak_excess_rate(&self) -> T {
        T::lit(8.0) * T::PI() * T::PI() * self.coupling_g.powi(2) / self.decoherence_gamma
    }

    /// `Γ_i / 2π` in MHz.
    pub fn half_width_mhz(&self) -> T {
        self.decoherence_gamma / (T::lit(2.0) * T::PI())
    }

    /// Checks `Γ_{1,i} > 2π g_i > Γ_{1,Q}`.
    ///
    /// Without a known `Γ_{1,i}`, the bound `Γ_{1,i} ≤ 2(Γ_i − Γ_Q)` implied by
    /// the width decomposition is used: if even that upper bound fails the
    /// left inequality, the peak is flagged `Violated`.
    pub fn regime(&self, background_gamma_1q: T, qubit_dephasing: T) -> RegimeValidity {
        let two_pi_g = T::lit(2.0) * T::PI() * self.coupling_g;
        if !(two_pi_g > background_gamma_1q) {
            return RegimeValidity::Violated;
        }
        match self.relaxation_gamma_1 {
            Some(g1) if g1 > two_pi_g => RegimeValidity::Valid,
            Some(_) => RegimeValidity::Violated,
            None => {
                let upper = T::lit(2.0) * (self.decoherence_gamma - qubit_dephasing);
                if upper > two_pi_g {
                    RegimeValidity::Plausible
                } else {
                    RegimeValidity::Violated
                }
            }
        }
    }
}

/// Relaxation model `1/T1(f) = Σ_i 2 g_i² Γ_i / ((Γ_i/2π)² + (f_i − f)²) + Γ_{1,Q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel<T> {
    pub peaks: Vec<LorentzianPeak<T>>,
    /// Γ_{1,Q}, μs⁻¹
    pub background_gamma_1q: T,
    /// Γ_Q, MHz
    pub qubit_dephasing_gamma_q: T,
}

impl<T: Scalar> Default for SpectrumModel<T> {
    fn default() -> Self {
        Self {
            peaks: Vec::new(),
            background_gamma_1q: T::lit(DEFAULT_BACKGROUND_RATE),
            qubit_dephasing_gamma_q: T::lit(DEFAULT_QUBIT_DEPHASING_MHZ),
        }
    }
}

impl<T: Scalar> SpectrumModel<T> {
    pub fn new(peaks: Vec<LorentzianPeak<T>>, background_gamma_1q: T) -> Result<Self> {
        let m = Self {
            peaks,
            background_gamma_1q,
            ..Self::default()
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.background_gamma_1q >= T::zero()) || !self.background_gamma_1q.is_finite() {
            return invalid(format!(
                "background rate must be finite and >= 0, got {}",
                self.background_gamma_1q
            ));
        }
        if !(self.qubit_dephasing_gamma_q >= T::zero()) {
            return invalid("qubit dephasing rate must be >= 0");
        }
        self.peaks.iter().try_for_each(LorentzianPeak::validate)
    }

    /// `1/T1` in μs⁻¹ at qubit frequency `f` (GHz).
    pub fn rate_at(&self, f: T) -> T {
        self.background_gamma_1q + self.peaks.iter().map(|p| p.excess_rate(f)).sum::<T>()
    }
}

/// Sampled `1/T1(f)` trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSpectrum<T> {
    /// GHz, strictly increasing
    pub frequencies: Vec<T>,
    /// μs⁻¹
    pub relaxation_rates: Vec<T>,
    /// Standard errors of the rates, μs⁻¹.
    pub rate_errors: Option<Vec<T>>,
}

impl<T: Scalar> RelaxationSpectrum<T> {
    pub fn new(
        frequencies: Vec<T>,
        relaxation_rates: Vec<T>,
        rate_errors: Option<Vec<T>>,
    ) -> Result<Self> {
        if frequencies.len() != relaxation_rates.len() {
            return invalid("frequency and rate vectors differ in length");
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("spectrum frequencies must be strictly increasing");
        }
        if relaxation_rates
            .iter()
            .any(|r| !(*r > T::zero()) || !r.is_finite())
        {
            return invalid("relaxation rates must be positive and finite");
        }
        if let Some(err) = &rate_errors {
            if err.len() != frequencies.len() {
                return invalid("rate error vector differs in length");
            }
        }
        Ok(Self {
            frequencies,
            relaxation_rates,
            rate_errors,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn t1_values(&self) -> Vec<T> {
        self.relaxation_rates.iter().map(|r| r.recip()).collect()
    }
}

/// Evaluates the model on `grid` (GHz, sorted).
pub fn synth_spectrum<T: Scalar>(
    model: &SpectrumModel<T>,
    grid: &[T],
) -> Result<RelaxationSpectrum<T>> {
    if grid.is_empty() {
        return invalid("frequency grid is empty");
    }
    model.validate()?;
    let rates = grid.iter().map(|&f| model.rate_at(f)).collect();
    RelaxationSpectrum::new(grid.to_vec(), rates, None)
}

/// Uniform grid from `start` to `stop` inclusive in steps of `step` (all GHz).
pub fn frequency_grid<T: Scalar>(start: T, stop: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(stop >= start) {
        return invalid("frequency grid needs step > 0 and stop >= start");
    }
    let n = ((stop - start) / step + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0)
        + 1;
    Ok((0..n).map(|k| start + T::of_usize(k) * step).collect())
}

/// Half-wave mode spacing `c / (2L√ε_r)` of a cable, in GHz.
pub fn half_wave_spacing<T: Scalar>(cable_length_m: T, eps_r: T) -> Result<T> {
    if !(cable_length_m > T::zero()) {
        return invalid(format!(
            "cable length must be positive, got {cable_length_m}"
        ));
    }
    if !(eps_r >= T::one()) {
        return invalid(format!("relative permittivity must be >= 1, got {eps_r}"));
    }
    Ok(T::lit(CODATA.speed_of_light_c)
        / (T::lit(2.0) * cable_length_m * eps_r.sqrt())
        / T::lit(1e9))
}

/// All harmonics `n·f_r` (n ≥ 1) of the cable's half-wave resonance inside
/// `band = (low, high)` GHz. An empty or inverted band yields no modes.
pub fn spurious_resonances<T: Scalar>(cable_length_m: T, eps_r: T, band: (T, T)) -> Result<Vec<T>> {
    let spacing = half_wave_spacing(cable_length_m, eps_r)?;
    let (low, high) = band;
    if !(high >= low) {
        return Ok(Vec::new());
    }
    let first = (low / spacing).ceil().max(T::one()).to_u64().unwrap_or(1);
    let mut modes = Vec::new();
    let mut n = first;
    loop {
        let f = T::from_u64(n).unwrap() * spacing;
        if f > high {
            break;
        }
        if f >= low {
            modes.push(f);
        }
        n += 1;
    }
    Ok(modes)
}
