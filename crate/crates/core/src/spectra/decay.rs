use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::csvio::{csv_error, fmt_sig9, read_numeric_table, writer};
use crate::error::{data_err, invalid, Result};
use crate::rng::substream;
use crate::scalar::Scalar;

/// Excited-state population measured after each delay of a T1 sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve<T> {
    /// μs, strictly increasing
    pub delays: Vec<T>,
    /// fraction of shots read out in |1⟩
    pub excited_population: Vec<T>,
    pub shots_per_delay: u64,
}

impl<T: Scalar> DecayCurve<T> {
    pub fn new(delays: Vec<T>, excited_population: Vec<T>, shots_per_delay: u64) -> Result<Self> {
        if delays.len() != excited_population.len() {
            return invalid("delay and population vectors differ in length");
        }
        if delays.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("decay delays must be strictly increasing");
        }
        if excited_population
            .iter()
            .any(|p| !(*p >= T::zero() && *p <= T::one()))
        {
            return invalid("populations must lie in [0, 1]");
        }
        Ok(Self {
            delays,
            excited_population,
            shots_per_delay,
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = writer(w);
        out.write_record(["delay_us", "p1", "shots"])
            .map_err(|e| csv_error("decay", e))?;
        for (d, p) in self.delays.iter().zip(&self.excited_population) {
            out.write_record([fmt_sig9(*d), fmt_sig9(*p), self.shots_per_delay.to_string()])
                .map_err(|e| csv_error("decay", e))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, source: &str) -> Result<Self> {
        let rows = read_numeric_table::<_, f64>(r, &["delay_us", "p1", "shots"], source)?;
        let shots = rows.first().map(|r| r[2]).unwrap_or(0.0);
        if rows.iter().any(|r| r[2] != shots) || shots < 0.0 || shots.fract() != 0.0 {
            return Err(data_err(
                source,
                "shot count must be a constant non-negative integer",
            ));
        }
        let (delays, pops) = rows.iter().map(|r| (T::lit(r[0]), T::lit(r[1]))).unzip();
        Self::new(delays, pops, shots as u64).map_err(|e| data_err(source, e.to_string()))
    }
}

/// `n` logarithmically spaced points from `start` to `stop` inclusive.
pub fn log_spaced_delays<T: Scalar>(start: T, stop: T, n: usize) -> Result<Vec<T>> {
    if !(start > T::zero()) || !(stop > start) || n < 2 {
        return invalid("log spacing needs 0 < start < stop and n >= 2");
    }
    let (a, b) = (start.ln(), stop.ln());
    let last = T::of_usize(n - 1);
    Ok((0..n)
        .map(|k| (a + (b - a) * T::of_usize(k) / last).exp())
        .collect())
}

/// The measurement protocol's 40 delays from 0.01 to 100 μs.
pub fn protocol_delays<T: Scalar>() -> Vec<T> {
    log_spaced_delays(T::lit(0.01), T::lit(100.0), 40).expect("static protocol")
}

/// Seeded [`synth_decay_with`].
pub fn synth_decay<T: Scalar>(
    t1: T,
    delays: &[T],
    shots: u64,
    init_fidelity: T,
    readout_fidelity: T,
    seed: u64,
) -> Result<DecayCurve<T>> {
    synth_decay_with(
        t1,
        delays,
        shots,
        init_fidelity,
        readout_fidelity,
        &mut substream(seed, 0),
    )
}

/// Simulates a T1 experiment: ideal population `F_init · exp(−t/T1)` passed
/// through a symmetric assignment-error channel of fidelity `F_ro`, then
/// binomially sampled with `shots` repetitions per delay.
pub fn synth_decay_with<T: Scalar, R: Rng + ?Sized>(
    t1: T,
    delays: &[T],
    shots: u64,
    init_fidelity: T,
    readout_fidelity: T,
    rng: &mut R,
) -> Result<DecayCurve<T>> {
    if !(t1 > T::zero()) {
        return invalid(format!("T1 must be positive, got {t1}"));
    }
    if shots == 0 {
        return invalid("at least one shot per delay is required");
    }
    let half = T::lit(0.5);
    for (name, f) in [
        ("initialisation", init_fidelity),
        ("readout", readout_fidelity),
    ] {
        if !(f > half && f <= T::one()) {
            return invalid(format!("{name} fidelity must lie in (0.5, 1], got {f}"));
        }
    }
    let mut pops = Vec::with_capacity(delays.len());
    for &t in delays {
        let ideal = init_fidelity * (-t / t1).exp();
        let measured =
            readout_fidelity * ideal + (T::one() - readout_fidelity) * (T::one() - ideal);
        let p = measured.to_f64_lossy().clamp(0.0, 1.0);
        let k = Binomial::new(shots, p)
            .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?
            .sample(rng);
        pops.push(T::from_u64(k).unwrap() / T::from_u64(shots).unwrap());
    }
    DecayCurve::new(delays.to_vec(), pops, shots)
}
