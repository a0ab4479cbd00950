use serde::{Deserialize, Serialize};

use super::median;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectra::T1Dataset;

/// Which line cut of the dataset to histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cut {
    /// All frequencies at one time index.
    Time(usize),
    /// All times at one frequency index.
    Frequency(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BinPolicy {
    /// `⌈log2 n⌉ + 1` bins.
    #[default]
    Sturges,
    Fixed(usize),
}

/// Sarle's bimodality coefficient above this value suggests more than one
/// mode; 5/9 is the value for a uniform distribution.
pub const BIMODALITY_THRESHOLD: f64 = 5.0 / 9.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram<T> {
    /// `counts.len() + 1` bin edges, μs.
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
    pub min: T,
    pub median: T,
    pub max: T,
    /// Sarle's `(γ² + 1)/(κ + 3(n−1)²/((n−2)(n−3)))`; absent for fewer than
    /// four values or zero spread.
    pub bimodality_coefficient: Option<T>,
    pub multimodal: bool,
}

pub fn t1_distributions<T: Scalar>(
    dataset: &T1Dataset<T>,
    cut: Cut,
    bins: BinPolicy,
) -> Result<Histogram<T>> {
    let values = match cut {
        Cut::Time(i) if i < dataset.n_times() => dataset.time_slice(i).to_vec(),
        Cut::Frequency(j) if j < dataset.n_frequencies() => dataset.frequency_slice(j),
        _ => return invalid(format!("{cut:?} is out of range")),
    };
    histogram(&values, bins)
}

pub fn histogram<T: Scalar>(values: &[T], bins: BinPolicy) -> Result<Histogram<T>> {
    if values.is_empty() {
        return invalid("cannot histogram an empty cut");
    }
    let n = values.len();
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let n_bins = if max > min {
        match bins {
            BinPolicy::Sturges => (n as f64).log2().ceil() as usize + 1,
            BinPolicy::Fixed(k) if k > 0 => k,
            BinPolicy::Fixed(_) => return invalid("bin count must be positive"),
        }
    } else {
        1
    };
    let width = (max - min) / T::of_usize(n_bins);
    let edges: Vec<T> = (0..=n_bins)
        .map(|k| {
            if k == n_bins {
                max
            } else {
                min + width * T::of_usize(k)
            }
        })
        .collect();
    let mut counts = vec![0usize; n_bins];
    for v in values {
        let k = if width > T::zero() {
            ((*v - min) / width)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(n_bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    let bc = bimodality_coefficient(values);
    Ok(Histogram {
        edges,
        counts,
        min,
        median: median(values),
        max,
        bimodality_coefficient: bc,
        multimodal: bc.is_some_and(|b| b > T::lit(BIMODALITY_THRESHOLD)),
    })
}

/// Sarle's coefficient from the sample skewness and excess kurtosis.
pub fn bimodality_coefficient<T: Scalar>(values: &[T]) -> Option<T> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let nf = T::of_usize(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let m = |p: i32| values.iter().map(|v| (*v - mean).powi(p)).sum::<T>() / nf;
    let m2 = m(2);
    if !(m2 > T::zero()) {
        return None;
    }
    let one = T::one();
    let (two, three) = (T::lit(2.0), T::lit(3.0));
    // bias-corrected skewness and excess kurtosis
    let g1 = m(3) / m2.powf(T::lit(1.5));
    let g2 = m(4) / (m2 * m2) - three;
    let skew = g1 * (nf * (nf - one)).sqrt() / (nf - two);
    let kurt = (nf - one) / ((nf - two) * (nf - T::lit(3.0))) * ((nf + one) * g2 + T::lit(6.0));
    let denom = kurt + three * (nf - one).powi(2) / ((nf - two) * (nf - three));
    Some((skew * skew + one) / denom)
}
