//! Two-level-system defects in superconducting qubits: relaxation-spectrum
//! synthesis, a fluctuator-bath spectral-diffusion simulator, and estimators
//! that recover defect parameters from time-resolved T1 spectroscopy.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double-precision flavour used by the CLI.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod csvio;
pub mod diffusion;
pub mod error;
pub mod physmodel;
pub mod rng;
pub mod scalar;
pub mod spectra;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type T1Dataset64 = spectra::T1Dataset<f64>;
pub type SpectrumModel64 = spectra::SpectrumModel<f64>;
pub type LorentzianPeak64 = spectra::LorentzianPeak<f64>;
pub type DecayCurve64 = spectra::DecayCurve<f64>;
pub type SimConfig64 = diffusion::SimConfig<f64>;
pub type FitResult64 = analysis::FitResult<f64>;
pub type DefectReport64 = analysis::DefectReport<f64>;

pub type Trajectory32 = trajectory::Trajectory<f32>;
pub type T1Dataset32 = spectra::T1Dataset<f32>;
pub type SimConfig32 = diffusion::SimConfig<f32>;
