use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{synth_decay_with, SpectrumModel};
use crate::analysis::fit_decay;
use crate::csvio::{csv_error, fmt_sig9, read_numeric_table, writer};
use crate::error::{data_err, invalid, Result};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// A peak of the base model whose center follows a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilePeak<T> {
    pub peak_index: usize,
    pub trajectory: Trajectory<T>,
}

/// Full shot-level simulation: each grid point is a synthetic decay curve
/// refitted with [`fit_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotLevelNoise<T> {
    pub shots: u64,
    pub init_fidelity: T,
    pub readout_fidelity: T,
    /// μs
    pub delays: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetNoise<T> {
    /// σ of a multiplicative log-normal factor on each T1; 0 disables.
    pub t1_lognormal_sigma: T,
    /// Half-range (MHz) of a uniform qubit-frequency error drawn once per time
    /// stamp; 0 disables.
    pub frequency_jitter_mhz: T,
    pub shot_level: Option<ShotLevelNoise<T>>,
}

impl<T: Scalar> Default for DatasetNoise<T> {
    fn default() -> Self {
        Self {
            t1_lognormal_sigma: T::zero(),
            frequency_jitter_mhz: T::zero(),
            shot_level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub seed: u64,
    pub software_version: String,
    /// Resolved generator parameters.
    pub parameters: serde_json::Value,
}

/// T1 values on a (time, frequency) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Dataset<T> {
    /// hours
    pub time_stamps: Vec<T>,
    /// GHz
    pub frequencies: Vec<T>,
    /// μs, row-major by time: `t1_grid[i * n_freq + j]`.
    pub t1_grid: Vec<T>,
    /// Standard errors of T1 when produced by shot-level simulation.
    pub t1_stderr: Option<Vec<T>>,
    pub provenance: Option<DatasetProvenance>,
}

impl<T: Scalar> T1Dataset<T> {
    pub fn new(time_stamps: Vec<T>, frequencies: Vec<T>, t1_grid: Vec<T>) -> Result<Self> {
        if time_stamps.is_empty() || frequencies.is_empty() {
            return invalid("dataset axes must be non-empty");
        }
        if time_stamps.len() * frequencies.len() != t1_grid.len() {
            return invalid(format!(
                "grid has {} values, expected {} x {}",
                t1_grid.len(),
                time_stamps.len(),
                frequencies.len()
            ));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0]))
            || time_stamps.windows(2).any(|w| !(w[1] > w[0]))
        {
            return invalid("dataset axes must be strictly increasing");
        }
        if t1_grid.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return invalid("all T1 values must be positive and finite");
        }
        Ok(Self {
            time_stamps,
            frequencies,
            t1_grid,
            t1_stderr: None,
            provenance: None,
        })
    }

    pub fn n_times(&self) -> usize {
        self.time_stamps.len()
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn t1(&self, time_index: usize, freq_index: usize) -> T {
        self.t1_grid[time_index * self.frequencies.len() + freq_index]
    }

    /// T1 values of one time slice.
    pub fn time_slice(&self, time_index: usize) -> &[T] {
        let n = self.frequencies.len();
        &self.t1_grid[time_index * n..(time_index + 1) * n]
    }

    /// T1 values at one frequency across time.
    pub fn frequency_slice(&self, freq_index: usize) -> Vec<T> {
        (0..self.time_stamps.len())
            .map(|i| self.t1(i, freq_index))
            .collect()
    }

    /// The `1/T1` trace of one time slice, with rate errors when known.
    pub fn spectrum_at(&self, time_index: usize) -> Result<super::RelaxationSpectrum<T>> {
        let t1 = self.time_slice(time_index);
        let n = self.frequencies.len();
        let errors = self.t1_stderr.as_ref().map(|se| {
            se[time_index * n..(time_index + 1) * n]
                .iter()
                .zip(t1)
                .map(|(s, t)| *s / (*t * *t))
                .collect()
        });
        super::RelaxationSpectrum::new(
            self.frequencies.clone(),
            t1.iter().map(|v| v.recip()).collect(),
            errors,
        )
    }

    /// `time_hr,freq_GHz,t1_us`, row-major by time.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = writer(w);
        out.write_record(["time_hr", "freq_GHz", "t1_us"])
            .map_err(|e| csv_error("dataset", e))?;
        for (i, t) in self.time_stamps.iter().enumerate() {
            let ts = fmt_sig9(*t);
            for (j, f) in self.frequencies.iter().enumerate() {
                out.write_record([ts.as_str(), &fmt_sig9(*f), &fmt_sig9(self.t1(i, j))])
                    .map_err(|e| csv_error("dataset", e))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Parses the CSV layout written by [`write_csv`](Self::write_csv). Rows
    /// must form a complete grid ordered by time then frequency.
    pub fn read_csv<R: Read>(r: R, source: &str) -> Result<Self> {
        let rows = read_numeric_table::<_, T>(r, &["time_hr", "freq_GHz", "t1_us"], source)?;
        if rows.is_empty() {
            return Err(data_err(source, "dataset contains no rows"));
        }
        let mut times: Vec<T> = Vec::new();
        for row in &rows {
            if times.last() != Some(&row[0]) {
                times.push(row[0]);
            }
        }
        if rows.len() % times.len() != 0 {
            return Err(data_err(
                source,
                "rows do not form a complete time x frequency grid",
            ));
        }
        let n_freq = rows.len() / times.len();
        let freqs: Vec<T> = rows[..n_freq].iter().map(|r| r[1]).collect();
        for (k, row) in rows.iter().enumerate() {
            let line = k + 2;
            let (i, j) = (k / n_freq, k % n_freq);
            if row[0] != times[i] {
                return Err(data_err(
                    format!("{source}:{line} column `time_hr`"),
                    "rows are not grouped by time stamp",
                ));
            }
            if row[1] != freqs[j] {
                return Err(data_err(
                    format!("{source}:{line} column `freq_GHz`"),
                    "frequency axis differs from the first time slice",
                ));
            }
            if !(row[2] > T::zero()) {
                return Err(data_err(
                    format!("{source}:{line} column `t1_us`"),
                    "T1 must be positive",
                ));
            }
        }
        let grid = rows.iter().map(|r| r[2]).collect();
        Self::new(times, freqs, grid).map_err(|e| data_err(source, e.to_string()))
    }
}

/// Composes the relaxation model with defect trajectories into a time-resolved
/// T1 dataset.
///
/// At each time stamp every mobile peak is displaced by its trajectory value
/// (sample-and-hold), and the model is evaluated on `grid`. T1 is the model
/// value `1/rate` unless shot-level noise is requested. Each time stamp draws
/// from its own RNG substream, so stamps are generated in parallel without
/// affecting the output.
pub fn synth_dataset<T: Scalar>(
    base_model: &SpectrumModel<T>,
    mobile: &[MobilePeak<T>],
    grid: &[T],
    time_stamps: &[T],
    noise: &DatasetNoise<T>,
    seed: u64,
) -> Result<T1Dataset<T>> {
    base_model.validate()?;
    let mut seen = vec![false; base_model.peaks.len()];
    for m in mobile {
        if m.peak_index >= base_model.peaks.len() {
            return invalid(format!(
                "trajectory refers to peak {} but the model has {} peaks",
                m.peak_index,
                base_model.peaks.len()
            ));
        }
        if std::mem::replace(&mut seen[m.peak_index], true) {
            return invalid(format!(
                "peak {} has more than one trajectory",
                m.peak_index
            ));
        }
        for &t in time_stamps {
            if m.trajectory.value_at(t).is_none() {
                return invalid(format!(
                    "trajectory for peak {} does not cover time {t} h",
                    m.peak_index
                ));
            }
        }
    }
    if !(noise.t1_lognormal_sigma >= T::zero()) || !(noise.frequency_jitter_mhz >= T::zero()) {
        return invalid("noise magnitudes must be non-negative");
    }
    let mut dataset = T1Dataset::new(
        time_stamps.to_vec(),
        grid.to_vec(),
        vec![T::one(); time_stamps.len() * grid.len()],
    )?;

    let slices: Vec<(Vec<T>, Vec<T>)> = time_stamps
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = substream(seed, i as u64);
            let mut model = base_model.clone();
            for m in mobile {
                let shift_mhz = m.trajectory.value_at(t).expect("coverage checked");
                model.peaks[m.peak_index].center_frequency =
                    model.peaks[m.peak_index].center_frequency + shift_mhz / T::lit(1e3);
            }
            let jitter_ghz = if noise.frequency_jitter_mhz > T::zero() {
                let u: f64 = rng.random_range(-1.0..=1.0);
                T::lit(u) * noise.frequency_jitter_mhz / T::lit(1e3)
            } else {
                T::zero()
            };
            let mut t1s = Vec::with_capacity(grid.len());
            let mut ses = Vec::with_capacity(grid.len());
            for &f in grid {
                let exact = model.rate_at(f + jitter_ghz).recip();
                let (mut t1, se) = match &noise.shot_level {
                    Some(shot) => shot_level_t1(exact, shot, &mut rng),
                    None => (exact, T::zero()),
                };
                if noise.t1_lognormal_sigma > T::zero() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    t1 = t1 * (noise.t1_lognormal_sigma * T::lit(z)).exp();
                }
                t1s.push(t1);
                ses.push(se);
            }
            (t1s, ses)
        })
        .collect();

    dataset.t1_grid.clear();
    let mut stderr = Vec::new();
    for (t1s, ses) in slices {
        dataset.t1_grid.extend(t1s);
        stderr.extend(ses);
    }
    if noise.shot_level.is_some() {
        dataset.t1_stderr = Some(stderr);
    }
    dataset.provenance = Some(DatasetProvenance {
        seed,
        software_version: crate::VERSION.to_string(),
        parameters: serde_json::json!({
            "model": base_model,
            "mobile_peaks": mobile.iter().map(|m| m.peak_index).collect::<Vec<_>>(),
            "noise": noise,
        }),
    });
    Ok(dataset)
}

fn shot_level_t1<T: Scalar, R: Rng>(exact: T, shot: &ShotLevelNoise<T>, rng: &mut R) -> (T, T) {
    let curve = synth_decay_with(
        exact,
        &shot.delays,
        shot.shots,
        shot.init_fidelity,
        shot.readout_fidelity,
        rng,
    );
    let fit = curve.ok().map(|c| fit_decay(&c));
    match fit {
        Some(Ok(f))
            if !f.failed && f.t1 > T::zero() && f.t1.is_finite() && f.t1_stderr.is_finite() =>
        {
            (f.t1, f.t1_stderr)
        }
        // unresolvable decay: keep the model value with a 100% uncertainty
        _ => (exact, exact),
    }
}
