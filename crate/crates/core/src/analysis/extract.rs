use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectra::T1Dataset;
use crate::trajectory::Trajectory;

/// Default half width of the tracking window, MHz.
pub const DEFAULT_WINDOW_HALFWIDTH_MHZ: f64 = 20.0;

/// A tracked defect frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction<T> {
    /// `ΔE/h` relative to the first slice, MHz.
    pub trajectory: Trajectory<T>,
    /// Absolute transition frequency per tracked slice, GHz.
    pub frequencies: Vec<T>,
    /// Tracking stopped early because the maximum reached the edge of the
    /// frequency axis.
    pub truncated: bool,
    /// Some window was clipped at the edge of the frequency axis.
    pub clipped: bool,
    /// The window overlapped another tracked defect's window at least once.
    pub collided: bool,
}

/// Tracks one defect: in each time slice, the frequency of maximum `1/T1`
/// inside a window centered on the previous slice's estimate.
pub fn extract_trajectory<T: Scalar>(
    dataset: &T1Dataset<T>,
    window_center: T,
    window_halfwidth_mhz: T,
) -> Result<Extraction<T>> {
    Ok(
        extract_trajectories(dataset, &[window_center], window_halfwidth_mhz)?
            .pop()
            .expect("one center in, one extraction out"),
    )
}

/// Tracks several defects at once. Grid points claimed by two overlapping
/// windows go to the defect whose previous position is nearest; such slices
/// set `collided`.
pub fn extract_trajectories<T: Scalar>(
    dataset: &T1Dataset<T>,
    centers: &[T],
    window_halfwidth_mhz: T,
) -> Result<Vec<Extraction<T>>> {
    if !(window_halfwidth_mhz > T::zero()) {
        return invalid("window half width must be positive");
    }
    let freqs = &dataset.frequencies;
    let (f_lo, f_hi) = (freqs[0], *freqs.last().unwrap());
    for c in centers {
        if !(*c >= f_lo && *c <= f_hi) {
            return invalid(format!(
                "window center {c} GHz lies outside the dataset [{f_lo}, {f_hi}]"
            ));
        }
    }
    let hw = window_halfwidth_mhz / T::lit(1e3);
    let n = centers.len();
    let mut current: Vec<T> = centers.to_vec();
    let mut active = vec![true; n];
    let mut out: Vec<(Vec<T>, Vec<T>)> = vec![(Vec::new(), Vec::new()); n];
    let (mut clipped, mut collided) = (vec![false; n], vec![false; n]);

    for ti in 0..dataset.n_times() {
        let slice = dataset.time_slice(ti);
        let mut next = current.clone();
        for d in 0..n {
            if !active[d] {
                continue;
            }
            let c = current[d];
            if c - hw < f_lo || c + hw > f_hi {
                clipped[d] = true;
            }
            let lo = freqs.partition_point(|f| *f < c - hw);
            let hi = freqs.partition_point(|f| *f <= c + hw);
            let mut best: Option<usize> = None;
            for j in lo..hi {
                let f = freqs[j];
                // nearest-previous-position ownership of overlapping windows
                let owned = (0..n).all(|o| {
                    if o == d || !active[o] || (f - current[o]).abs() > hw {
                        return true;
                    }
                    collided[d] = true;
                    let (mine, theirs) = ((f - c).abs(), (f - current[o]).abs());
                    mine < theirs || (mine == theirs && d < o)
                });
                if owned && best.is_none_or(|b| slice[j] < slice[b]) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    next[d] = freqs[j];
                    out[d].0.push(dataset.time_stamps[ti]);
                    out[d].1.push(freqs[j]);
                    // pinned to the axis edge: the defect has left the dataset
                    if j == 0 || j + 1 == freqs.len() {
                        active[d] = false;
                    }
                }
                None => active[d] = false,
            }
        }
        current = next;
    }

    out.into_iter()
        .enumerate()
        .map(|(d, (times, f))| {
            if times.is_empty() {
                return invalid(format!("no grid points inside the window for defect {d}"));
            }
            let f0 = f[0];
            let delta = f.iter().map(|v| (*v - f0) * T::lit(1e3)).collect();
            Ok(Extraction {
                truncated: times.len() < dataset.n_times(),
                trajectory: Trajectory::new(times, delta)?,
                frequencies: f,
                clipped: clipped[d],
                collided: collided[d],
            })
        })
        .collect()
}
