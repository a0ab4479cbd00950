//! Closed-form defect physics: tunneling-defect energies, thermal factors,
//! phonon-assisted flip rates and the dipolar couplings between a defect and
//! the qubit or between two defects.
//!
//! Unit conventions used across the crate:
//!
//! * defect energies are stored as frequencies, `E/h` in GHz;
//! * couplings `g/h` are in MHz;
//! * dipole moments are in eÅ, defect separations in nm;
//! * temperatures are in kelvin.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// CODATA 2018 exact/recommended SI values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J·s
    pub planck_h: f64,
    /// J/K
    pub boltzmann_kb: f64,
    /// C
    pub electron_charge_e: f64,
    /// F/m
    pub vacuum_permittivity_eps0: f64,
    /// m/s
    pub speed_of_light_c: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    planck_h: 6.626_070_15e-34,
    boltzmann_kb: 1.380_649e-23,
    electron_charge_e: 1.602_176_634e-19,
    vacuum_permittivity_eps0: 8.854_187_812_8e-12,
    speed_of_light_c: 299_792_458.0,
};

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const ANGSTROM: f64 = 1e-10;
const NANOMETER: f64 = 1e-9;

/// Kelvin per GHz: `h · 1 GHz / k_B`.
fn kelvin_per_ghz() -> f64 {
    CODATA.planck_h * GHZ / CODATA.boltzmann_kb
}

/// Thermal energy `k_B T / h` expressed in GHz.
pub fn thermal_frequency_ghz<T: Scalar>(temperature: T) -> T {
    temperature / T::lit(kelvin_per_ghz())
}

/// Tunneling defect in the two-well picture. Both energies are stored as
/// frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectParams<T> {
    pub asymmetry_eps: T,
    pub tunneling_delta: T,
}

impl<T: Scalar> DefectParams<T> {
    pub fn new(asymmetry_eps: T, tunneling_delta: T) -> Result<Self> {
        if !asymmetry_eps.is_finite() || !tunneling_delta.is_finite() {
            return invalid("defect energies must be finite");
        }
        if tunneling_delta < T::zero() {
            return invalid(format!(
                "tunneling energy must be non-negative, got {tunneling_delta}"
            ));
        }
        Ok(Self {
            asymmetry_eps,
            tunneling_delta,
        })
    }

    /// `ε/E`, the projection factor entering the longitudinal coupling.
    pub fn asymmetry_ratio(&self) -> Result<T> {
        let e = transition_energy(self);
        if e == T::zero() {
            return Err(Error::Domain(
                "asymmetry ratio undefined at zero transition energy".into(),
            ));
        }
        Ok(self.asymmetry_eps / e)
    }
}

/// Environment seen by a thermal fluctuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams<T> {
    /// K
    pub temperature: T,
    pub relative_permittivity_eps_r: T,
    /// Phonon coupling prefactor α. Its units set the units of the returned
    /// rates (rate per GHz³ since Δ² and E are in GHz).
    pub phonon_alpha: T,
}

impl<T: Scalar> EnvironmentParams<T> {
    pub fn new(temperature: T, relative_permittivity_eps_r: T, phonon_alpha: T) -> Result<Self> {
        if !(temperature > T::zero()) {
            return invalid(format!("temperature must be positive, got {temperature}"));
        }
        if !(relative_permittivity_eps_r >= T::one()) {
            return invalid(format!(
                "relative permittivity must be >= 1, got {relative_permittivity_eps_r}"
            ));
        }
        if !(phonon_alpha > T::zero()) {
            return invalid(format!("phonon alpha must be positive, got {phonon_alpha}"));
        }
        Ok(Self {
            temperature,
            relative_permittivity_eps_r,
            phonon_alpha,
        })
    }
}

/// Electric dipole: magnitude in eÅ along a unit orientation vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleMoment<T> {
    pub magnitude: T,
    pub orientation: [T; 3],
}

impl<T: Scalar> DipoleMoment<T> {
    /// Builds a dipole, normalising `direction`.
    pub fn new(magnitude: T, direction: [T; 3]) -> Result<Self> {
        if !(magnitude >= T::zero()) || !magnitude.is_finite() {
            return invalid(format!(
                "dipole magnitude must be finite and >= 0, got {magnitude}"
            ));
        }
        let n = norm(&direction);
        if !(n > T::zero()) || !n.is_finite() {
            return invalid("dipole orientation must be a finite non-zero vector");
        }
        Ok(Self {
            magnitude,
            orientation: [direction[0] / n, direction[1] / n, direction[2] / n],
        })
    }

    pub fn vector(&self) -> [T; 3] {
        let m = self.magnitude;
        [
            m * self.orientation[0],
            m * self.orientation[1],
            m * self.orientation[2],
        ]
    }
}

/// Longitudinal TLS–TF coupling, both entries as `g/h` in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult<T> {
    pub g_zz_over_h: T,
    pub g_parallel_over_h: T,
}

impl<T: Scalar> CouplingResult<T> {
    /// Slow-fluctuator approximation `g∥ ≈ g_zz`.
    ///
    /// Valid when both defects are deep in the asymmetric limit (`|ε| ≈ E`),
    /// which holds for fluctuators flipping on minute-to-hour timescales
    /// (small tunneling energy).
    pub fn slow_fluctuator(g_zz_over_h: T) -> Self {
        Self {
            g_zz_over_h,
            g_parallel_over_h: g_zz_over_h,
        }
    }

    pub fn from_defects(
        g_zz_over_h: T,
        tls: &DefectParams<T>,
        tf: &DefectParams<T>,
    ) -> Result<Self> {
        Ok(Self {
            g_zz_over_h,
            g_parallel_over_h: g_parallel_from_gzz(g_zz_over_h, tls, tf)?,
        })
    }
}

/// Excitation and relaxation rates of a thermal fluctuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononRates<T> {
    /// Γ_{e→g}
    pub relaxation: T,
    /// Γ_{g→e}
    pub excitation: T,
}

impl<T: Scalar> PhononRates<T> {
    /// Mean telegraphic rate `(Γ_{e→g} + Γ_{g→e}) / 2`.
    pub fn mean_rate(&self) -> T {
        (self.relaxation + self.excitation) / T::lit(2.0)
    }
}

/// `E/h = √(ε² + Δ²)/h` in GHz.
pub fn transition_energy<T: Scalar>(defect: &DefectParams<T>) -> T {
    defect.asymmetry_eps.hypot(defect.tunneling_delta)
}

/// `exp(−E / k_B T)` for an energy given as a frequency in GHz.
pub fn boltzmann_factor<T: Scalar>(energy_ghz: T, temperature: T) -> Result<T> {
    if !(temperature > T::zero()) {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    Ok((-energy_ghz / thermal_frequency_ghz(temperature)).exp())
}

/// Phonon-assisted rates `Γ_{e→g} = α Δ² E coth(E / 2k_BT)` and
/// `Γ_{g→e} = exp(−E/k_BT) Γ_{e→g}`.
///
/// Energies are taken as ordinary frequencies (GHz); the returned rates are in
/// whatever time unit `α` carries.
pub fn phonon_rates<T: Scalar>(
    tf: &DefectParams<T>,
    env: &EnvironmentParams<T>,
) -> Result<PhononRates<T>> {
    if !(env.temperature > T::zero()) {
        return invalid(format!(
            "temperature must be positive, got {}",
            env.temperature
        ));
    }
    let e = transition_energy(tf);
    if e == T::zero() {
        return Err(Error::Domain(
            "phonon rates diverge at zero fluctuator energy (coth(0))".into(),
        ));
    }
    let x = e / thermal_frequency_ghz(env.temperature);
    let half = x / T::lit(2.0);
    let coth = T::one() / half.tanh();
    let relaxation = env.phonon_alpha * tf.tunneling_delta.powi(2) * e * coth;
    let excitation = (-x).exp() * relaxation;
    Ok(PhononRates {
        relaxation,
        excitation,
    })
}

/// Maximum (orientation-free) transverse qubit–defect coupling
/// `g = (2ed/x) √(hf / 2C_q)`, returned as `g/h` in MHz.
///
/// * `dipole_length` — Å
/// * `field_length` — m
/// * `frequency` — GHz
/// * `qubit_capacitance` — F
pub fn qubit_defect_coupling<T: Scalar>(
    dipole_length: T,
    field_length: T,
    frequency: T,
    qubit_capacitance: T,
) -> Result<T> {
    if !(field_length > T::zero()) {
        return invalid(format!("field length must be positive, got {field_length}"));
    }
    if !(dipole_length > T::zero()) || !(frequency > T::zero()) || !(qubit_capacitance > T::zero())
    {
        return invalid("dipole length, frequency and capacitance must be positive");
    }
    // Zero-point voltage sqrt(h f / 2C) in volts.
    let h = T::lit(CODATA.planck_h);
    let v_zpf = (h * frequency * T::lit(GHZ) / (T::lit(2.0) * qubit_capacitance)).sqrt();
    let e_over_h = T::lit(CODATA.electron_charge_e / CODATA.planck_h);
    let d = dipole_length * T::lit(ANGSTROM);
    let g_hz = T::lit(2.0) * e_over_h * d * v_zpf / field_length;
    Ok(g_hz / T::lit(MHZ))
}

/// `1/(4π ε₀) · (1 eÅ)² / (1 nm)³ / h` in MHz.
fn dipolar_prefactor_mhz() -> f64 {
    let p = CODATA.electron_charge_e * ANGSTROM;
    let r3 = NANOMETER.powi(3);
    p * p
        / (4.0 * std::f64::consts::PI * CODATA.vacuum_permittivity_eps0 * r3)
        / CODATA.planck_h
        / MHZ
}

/// Electric dipole–dipole `g_zz/h` in MHz:
/// `g_zz/2 = (p₁⊥·p₂⊥ − 2 p₁∥ p₂∥) / (4π ε₀ ε_r r³)`.
///
/// `separation` is the vector between the dipoles in nm. The parallel parts
/// are the signed projections onto the separation axis; the perpendicular
/// term is the dot product of the remaining vector components.
pub fn dipole_dipole_gzz<T: Scalar>(
    p1: &DipoleMoment<T>,
    p2: &DipoleMoment<T>,
    separation: [T; 3],
    eps_r: T,
) -> Result<T> {
    let r = norm(&separation);
    if !(r > T::zero()) {
        return Err(Error::Singular(
            "dipole-dipole coupling diverges at zero separation".into(),
        ));
    }
    if !(eps_r >= T::one()) {
        return invalid(format!("relative permittivity must be >= 1, got {eps_r}"));
    }
    let u = [separation[0] / r, separation[1] / r, separation[2] / r];
    let v1 = p1.vector();
    let v2 = p2.vector();
    let par1 = dot(&v1, &u);
    let par2 = dot(&v2, &u);
    let perp1 = [
        v1[0] - par1 * u[0],
        v1[1] - par1 * u[1],
        v1[2] - par1 * u[2],
    ];
    let perp2 = [
        v2[0] - par2 * u[0],
        v2[1] - par2 * u[1],
        v2[2] - par2 * u[2],
    ];
    let angular = dot(&perp1, &perp2) - T::lit(2.0) * par1 * par2;
    let half = T::lit(dipolar_prefactor_mhz()) * angular / (eps_r * r.powi(3));
    Ok(T::lit(2.0) * half)
}

/// `g∥ = g_zz (ε_TLS/E_TLS)(ε_TF/E_TF)`.
pub fn g_parallel_from_gzz<T: Scalar>(
    g_zz: T,
    tls: &DefectParams<T>,
    tf: &DefectParams<T>,
) -> Result<T> {
    Ok(g_zz * tls.asymmetry_ratio()? * tf.asymmetry_ratio()?)
}

pub(crate) fn dot<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm<T: Scalar>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}
