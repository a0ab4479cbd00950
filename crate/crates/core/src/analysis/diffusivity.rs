use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusivity<T> {
    /// MHz·hr^(-1/2)
    pub d: T,
    /// One-sigma standard error from the fit residuals.
    pub stderr: T,
    /// Fitted σ at t = 0 when the intercept is free, else zero.
    pub intercept: T,
}

/// Cross-trajectory standard deviation of `ΔE` at every time sample (n − 1
/// normalization). Trajectories must share one time grid.
pub fn ensemble_sigma<T: Scalar>(trajectories: &[Trajectory<T>]) -> Result<Vec<T>> {
    if trajectories.len() < 2 {
        return invalid(format!(
            "need at least 2 trajectories, got {}",
            trajectories.len()
        ));
    }
    let grid = trajectories[0].times();
    if trajectories.iter().any(|t| t.times() != grid) {
        return invalid("trajectories do not share a common time grid");
    }
    let n = T::of_usize(trajectories.len());
    Ok((0..grid.len())
        .map(|k| {
            let mean = trajectories.iter().map(|t| t.values()[k]).sum::<T>() / n;
            let ss: T = trajectories
                .iter()
                .map(|t| (t.values()[k] - mean).powi(2))
                .sum();
            (ss / (n - T::one())).sqrt()
        })
        .collect())
}

/// Fits `σ(t) = 2D√t` to the ensemble spread.
///
/// By default the line passes through the origin (`ΔE` is zero at the first
/// sample by construction); `with_intercept` frees the offset for robustness
/// checks.
pub fn estimate_diffusivity<T: Scalar>(
    trajectories: &[Trajectory<T>],
    with_intercept: bool,
) -> Result<Diffusivity<T>> {
    let sigma = ensemble_sigma(trajectories)?;
    let t0 = trajectories[0].times()[0];
    let x: Vec<T> = trajectories[0]
        .times()
        .iter()
        .map(|t| T::lit(2.0) * (*t - t0).max(T::zero()).sqrt())
        .collect();
    let n = x.len();
    let n_params = if with_intercept { 2 } else { 1 };
    if n <= n_params {
        return invalid(format!("need more than {n_params} time samples, got {n}"));
    }
    let (slope, intercept, var_slope_unit) = if with_intercept {
        let nn = T::of_usize(n);
        let mx = x.iter().copied().sum::<T>() / nn;
        let my = sigma.iter().copied().sum::<T>() / nn;
        let sxx: T = x.iter().map(|v| (*v - mx).powi(2)).sum();
        if !(sxx > T::zero()) {
            return invalid("time samples do not span a range");
        }
        let sxy: T = x
            .iter()
            .zip(&sigma)
            .map(|(a, b)| (*a - mx) * (*b - my))
            .sum();
        let slope = sxy / sxx;
        (slope, my - slope * mx, T::one() / sxx)
    } else {
        let sxx: T = x.iter().map(|v| *v * *v).sum();
        if !(sxx > T::zero()) {
            return invalid("time samples do not span a range");
        }
        let sxy: T = x.iter().zip(&sigma).map(|(a, b)| *a * *b).sum();
        (sxy / sxx, T::zero(), T::one() / sxx)
    };
    let rss: T = x
        .iter()
        .zip(&sigma)
        .map(|(a, b)| (intercept + slope * *a - *b).powi(2))
        .sum();
    let s2 = rss / T::of_usize(n - n_params);
    Ok(Diffusivity {
        d: slope,
        stderr: (s2 * var_slope_unit).sqrt(),
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walks(n: usize, steps: usize, s: f64, seed: u64) -> Vec<Trajectory<f64>> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, s).unwrap();
        (0..n)
            .map(|_| {
                let mut acc = 0.0;
                let v = (0..steps)
                    .map(|k| {
                        if k > 0 {
                            acc += normal.sample(&mut rng);
                        }
                        acc
                    })
                    .collect();
                Trajectory::uniform(0.25, v).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_trajectories_have_zero_diffusivity() {
        let z = vec![Trajectory::uniform(0.25, vec![0.0; 121]).unwrap(); 13];
        let d = estimate_diffusivity(&z, false).unwrap();
        assert_eq!(d.d, 0.0);
        assert_eq!(d.stderr, 0.0);
    }

    #[test]
    fn needs_two_trajectories() {
        let one = vec![Trajectory::uniform(0.25, vec![0.0; 10]).unwrap()];
        assert!(estimate_diffusivity(&one, false).is_err());
        let mismatched = vec![
            Trajectory::uniform(0.25, vec![0.0; 10]).unwrap(),
            Trajectory::uniform(0.5, vec![0.0; 10]).unwrap(),
        ];
        assert!(estimate_diffusivity(&mismatched, false).is_err());
    }

    #[test]
    fn gaussian_walk_matches_analytic() {
        // σ(t) = s√(t/dt) = 2D√t with D = s/(2√dt) = 1
        let d = estimate_diffusivity(&walks(100, 121, 1.0, 7), false).unwrap();
        assert!((d.d - 1.0).abs() < 0.15, "{}", d.d);
        let free = estimate_diffusivity(&walks(100, 121, 1.0, 7), true).unwrap();
        assert!((free.d - 1.0).abs() < 0.2 && free.intercept.abs() < 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scale_equivariant(seed in 0u64..1000, lambda in 0.01f64..100.0) {
            let base = walks(5, 40, 1.0, seed);
            let scaled: Vec<_> = base.iter().map(|t| t.scaled(lambda)).collect();
            let a = estimate_diffusivity(&base, false).unwrap().d;
            let b = estimate_diffusivity(&scaled, false).unwrap().d;
            prop_assert!((b - lambda * a).abs() <= 1e-9 * (lambda * a).abs().max(1e-12));
        }
    }
}
