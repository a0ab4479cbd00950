use serde::{Deserialize, Serialize};

use super::jumps::{detect_jumps, JumpOptions};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Telegraphic,
    Diffusive,
    Mixed,
    /// No jumps and no variation above the noise floor.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOptions<T> {
    pub jumps: JumpOptions<T>,
    /// Share of total variation carried by jumps for a telegraphic call.
    pub telegraphic_fraction: T,
    /// Peak-to-peak range below which a jump-free trajectory counts as static, MHz.
    pub min_variation: T,
}

impl<T: Scalar> Default for RegimeOptions<T> {
    fn default() -> Self {
        Self {
            jumps: JumpOptions::default(),
            telegraphic_fraction: T::lit(0.8),
            min_variation: T::lit(1.0),
        }
    }
}

/// Heuristic split by how much of the total variation `Σ|ΔE(k) − ΔE(k−1)|`
/// the detected jumps carry.
pub fn classify_regime<T: Scalar>(
    traj: &Trajectory<T>,
    options: &RegimeOptions<T>,
) -> Result<Regime> {
    let jumps = detect_jumps(traj, &options.jumps)?;
    let total: T = traj.steps().iter().map(|s| s.abs()).sum();
    if jumps.is_empty() {
        let v = traj.values();
        let lo = v.iter().copied().fold(T::infinity(), T::min);
        let hi = v.iter().copied().fold(T::neg_infinity(), T::max);
        return Ok(if hi - lo > options.min_variation {
            Regime::Diffusive
        } else {
            Regime::Static
        });
    }
    let carried: T = jumps.iter().map(|j| j.amplitude.abs()).sum();
    Ok(if carried >= options.telegraphic_fraction * total {
        Regime::Telegraphic
    } else {
        Regime::Mixed
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn walk(s: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, s).unwrap();
        let mut acc = 0.0;
        (0..121)
            .map(|k| {
                if k > 0 {
                    acc += n.sample(&mut rng);
                }
                acc
            })
            .collect()
    }

    fn telegraph() -> Vec<f64> {
        (0..121)
            .map(|k| if (k / 10) % 2 == 0 { 0.0 } else { 20.0 })
            .collect()
    }

    fn classify(v: Vec<f64>) -> Regime {
        classify_regime(
            &Trajectory::uniform(0.25, v).unwrap(),
            &RegimeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn pure_telegraph() {
        assert_eq!(classify(telegraph()), Regime::Telegraphic);
    }

    #[test]
    fn sub_threshold_walk() {
        assert_eq!(classify(walk(0.5, 3)), Regime::Diffusive);
    }

    #[test]
    fn telegraph_plus_walk() {
        let v = telegraph()
            .iter()
            .zip(walk(1.0, 5))
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(classify(v), Regime::Mixed);
    }

    #[test]
    fn flat_is_static() {
        assert_eq!(classify(vec![0.0; 121]), Regime::Static);
    }
}
