//! Time series of TLS transition-frequency offsets.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::csvio::{csv_error, fmt_sig9, read_numeric_table, writer};
use crate::error::{data_err, invalid, Result};
use crate::scalar::Scalar;

/// `ΔE_TLS(t)/h = (E_TLS(t) − E_TLS(0))/h` in MHz, sampled at `times` (hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    times: Vec<T>,
    delta_e: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// `times` must be strictly increasing and the same length as `delta_e`.
    pub fn new(times: Vec<T>, delta_e: Vec<T>) -> Result<Self> {
        if times.is_empty() {
            return invalid("trajectory must have at least one sample");
        }
        if times.len() != delta_e.len() {
            return invalid(format!(
                "trajectory has {} times but {} values",
                times.len(),
                delta_e.len()
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("trajectory times must be strictly increasing");
        }
        if times.iter().chain(delta_e.iter()).any(|v| !v.is_finite()) {
            return invalid("trajectory contains non-finite values");
        }
        Ok(Self { times, delta_e })
    }

    /// Uniform grid `t_k = k·dt` starting at zero.
    pub fn uniform(dt: T, delta_e: Vec<T>) -> Result<Self> {
        if !(dt > T::zero()) {
            return invalid("time step must be positive");
        }
        let times = (0..delta_e.len()).map(|k| T::of_usize(k) * dt).collect();
        Self::new(times, delta_e)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.delta_e
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> T {
        *self.times.last().unwrap() - self.times[0]
    }

    /// Sample-and-hold lookup: the value at the latest sample time `<= t`.
    /// `None` outside `[t_0, t_end]`.
    pub fn value_at(&self, t: T) -> Option<T> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        let eps = T::lit(1e-9) * (T::one() + last.abs());
        if t < first - eps || t > last + eps {
            return None;
        }
        let idx = self.times.partition_point(|&x| x <= t + eps);
        Some(self.delta_e[idx.saturating_sub(1)])
    }

    pub fn max_abs(&self) -> T {
        self.delta_e.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            times: self.times.clone(),
            delta_e: self.delta_e.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Successive differences `ΔE(k) − ΔE(k−1)`.
    pub fn steps(&self) -> Vec<T> {
        self.delta_e.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = writer(w);
        out.write_record(["time_hr", "delta_E_MHz"])
            .map_err(|e| csv_error("trajectory", e))?;
        for (t, v) in self.times.iter().zip(&self.delta_e) {
            out.write_record([fmt_sig9(*t), fmt_sig9(*v)])
                .map_err(|e| csv_error("trajectory", e))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, source: &str) -> Result<Self> {
        let rows = read_numeric_table::<_, T>(r, &["time_hr", "delta_E_MHz"], source)?;
        let (times, values) = rows.into_iter().map(|row| (row[0], row[1])).unzip();
        Self::new(times, values).map_err(|e| data_err(source, e.to_string()))
    }
}

/// Long-format `traj_id,time_hr,delta_E_MHz` table holding many trajectories.
pub fn write_trajectories_long<T: Scalar, W: Write>(
    trajectories: &[Trajectory<T>],
    w: W,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["traj_id", "time_hr", "delta_E_MHz"])
        .map_err(|e| csv_error("trajectories", e))?;
    for (id, traj) in trajectories.iter().enumerate() {
        for (t, v) in traj.times.iter().zip(&traj.delta_e) {
            out.write_record([id.to_string(), fmt_sig9(*t), fmt_sig9(*v)])
                .map_err(|e| csv_error("trajectories", e))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectories_long<T: Scalar, R: Read>(
    r: R,
    source: &str,
) -> Result<Vec<Trajectory<T>>> {
    let rows = read_numeric_table::<_, f64>(r, &["traj_id", "time_hr", "delta_E_MHz"], source)?;
    let mut grouped: Vec<(Vec<T>, Vec<T>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let id = row[0];
        if id < 0.0 || id.fract() != 0.0 {
            return Err(data_err(
                format!("{source}:{} column `traj_id`", i + 2),
                "trajectory id must be a non-negative integer",
            ));
        }
        let id = id as usize;
        if id >= grouped.len() {
            grouped.resize_with(id + 1, Default::default);
        }
        grouped[id].0.push(T::lit(row[1]));
        grouped[id].1.push(T::lit(row[2]));
    }
    grouped
        .into_iter()
        .enumerate()
        .map(|(id, (t, v))| {
            Trajectory::new(t, v)
                .map_err(|e| data_err(format!("{source} traj_id {id}"), e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_and_hold_lookup() {
        let t = Trajectory::uniform(0.25, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(t.value_at(0.0), Some(0.0));
        assert_eq!(t.value_at(0.3), Some(1.0));
        assert_eq!(t.value_at(0.5), Some(3.0));
        assert_eq!(t.value_at(0.6), None);
        assert_eq!(t.value_at(-0.1), None);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Trajectory::<f64>::new(vec![], vec![]).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_round_trip_and_diagnostics() {
        let t = Trajectory::uniform(0.25, vec![0.0, -1.5, 2.25]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_hr,delta_E_MHz\n"));
        assert_eq!(Trajectory::<f64>::read_csv(&buf[..], "t.csv").unwrap(), t);

        let bad = "time_hr,delta_E_MHz\n0,0\n0.25,abc\n";
        let err = Trajectory::<f64>::read_csv(bad.as_bytes(), "t.csv")
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("t.csv:3") && err.contains("delta_E_MHz"),
            "{err}"
        );

        let ts = vec![t.clone(), t.scaled(2.0)];
        let mut buf = Vec::new();
        write_trajectories_long(&ts, &mut buf).unwrap();
        assert_eq!(
            read_trajectories_long::<f64, _>(&buf[..], "long").unwrap(),
            ts
        );
    }
}
