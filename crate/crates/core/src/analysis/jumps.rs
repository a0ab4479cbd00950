use serde::{Deserialize, Serialize};

use super::median;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Abrupt change in the transition frequency between consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent<T> {
    /// hours; time of the sample after the jump
    pub time: T,
    /// signed, MHz
    pub amplitude: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpOptions<T> {
    /// Smallest step counted as a jump, MHz. The default 3.5 MHz sits above
    /// the ±1 MHz grid quantization of a sub-2 MHz step and below a 5 MHz jump.
    pub min_jump: T,
    /// Multiplier κ on the median absolute step forming the noise floor.
    pub kappa: T,
}

impl<T: Scalar> Default for JumpOptions<T> {
    fn default() -> Self {
        Self {
            min_jump: T::lit(3.5),
            kappa: T::lit(5.0),
        }
    }
}

impl<T: Scalar> JumpOptions<T> {
    /// Detection threshold `max(min_jump, κ · median |ΔE(k) − ΔE(k−1)|)` for `traj`.
    pub fn threshold(&self, traj: &Trajectory<T>) -> T {
        let abs_steps: Vec<T> = traj.steps().iter().map(|s| s.abs()).collect();
        let floor = if abs_steps.is_empty() {
            T::zero()
        } else {
            self.kappa * median(&abs_steps)
        };
        self.min_jump.max(floor)
    }
}

/// Every step whose magnitude reaches the detection threshold.
pub fn detect_jumps<T: Scalar>(
    traj: &Trajectory<T>,
    options: &JumpOptions<T>,
) -> Result<Vec<JumpEvent<T>>> {
    if !(options.min_jump > T::zero()) {
        return invalid(format!(
            "min_jump must be positive, got {}",
            options.min_jump
        ));
    }
    let threshold = options.threshold(traj);
    Ok(traj
        .steps()
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.abs() >= threshold)
        .map(|(k, s)| JumpEvent {
            time: traj.times()[k + 1],
            amplitude: s,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpStatisticsOptions<T> {
    /// Jumps needed before the fluctuator energy is estimated.
    pub min_jumps_for_energy: usize,
    /// Allowed relative spread of jump magnitudes for a two-level trajectory.
    pub level_tolerance: T,
}

impl<T: Scalar> Default for JumpStatisticsOptions<T> {
    fn default() -> Self {
        Self {
            min_jumps_for_energy: 10,
            level_tolerance: T::lit(0.25),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpStatistics<T> {
    pub count: usize,
    /// Jumps per hour; estimates `(Γ_{e→g} + Γ_{g→e})/2`.
    pub mean_rate: T,
    /// Half the median jump magnitude, MHz.
    pub g_parallel: Option<T>,
    /// Mean dwell in the higher / lower frequency level, hours.
    pub upper_dwell: Option<T>,
    pub lower_dwell: Option<T>,
    /// `ln(Γ_{e→g}/Γ_{g→e})` from the dwell-time ratio.
    pub e_tf_over_kbt: Option<T>,
}

/// Rate and fluctuator-energy estimators from a jump list.
///
/// The energy estimate needs a two-level trajectory (alternating jump signs,
/// consistent magnitudes) with enough jumps. The fluctuator spends longer in
/// its ground state, so `Γ_{e→g}/Γ_{g→e}` equals the ratio of the longer to
/// the shorter mean dwell time. Dwell intervals before the first and after the
/// last jump are censored and ignored.
pub fn jump_statistics<T: Scalar>(
    events: &[JumpEvent<T>],
    total_time: T,
    options: &JumpStatisticsOptions<T>,
) -> Result<JumpStatistics<T>> {
    if !(total_time > T::zero()) {
        return invalid(format!("total time must be positive, got {total_time}"));
    }
    let count = events.len();
    let mut stats = JumpStatistics {
        count,
        mean_rate: T::of_usize(count) / total_time,
        g_parallel: None,
        upper_dwell: None,
        lower_dwell: None,
        e_tf_over_kbt: None,
    };
    if count == 0 {
        return Ok(stats);
    }
    let mags: Vec<T> = events.iter().map(|e| e.amplitude.abs()).collect();
    let typical = median(&mags);
    stats.g_parallel = Some(typical / T::lit(2.0));

    let alternating = events
        .windows(2)
        .all(|w| (w[0].amplitude > T::zero()) != (w[1].amplitude > T::zero()));
    let consistent = mags
        .iter()
        .all(|m| (*m - typical).abs() <= options.level_tolerance * typical);
    if !(alternating && consistent) || count < 3 {
        return Ok(stats);
    }
    let (mut up, mut n_up, mut low, mut n_low) = (T::zero(), 0usize, T::zero(), 0usize);
    for w in events.windows(2) {
        let dwell = w[1].time - w[0].time;
        if w[0].amplitude > T::zero() {
            up = up + dwell;
            n_up += 1;
        } else {
            low = low + dwell;
            n_low += 1;
        }
    }
    if n_up > 0 {
        stats.upper_dwell = Some(up / T::of_usize(n_up));
    }
    if n_low > 0 {
        stats.lower_dwell = Some(low / T::of_usize(n_low));
    }
    if count >= options.min_jumps_for_energy {
        if let (Some(u), Some(l)) = (stats.upper_dwell, stats.lower_dwell) {
            stats.e_tf_over_kbt = Some((u.max(l) / u.min(l)).ln());
        }
    }
    Ok(stats)
}
