use serde::{Deserialize, Serialize};

use super::lsq::{levenberg_marquardt, LeastSquaresProblem, LmOptions};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectra::DecayCurve;

/// Best fit of `A·exp(−t/T1) + B` with one-sigma (68%) uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    /// μs
    pub t1: T,
    pub t1_stderr: T,
    pub amplitude: T,
    pub amplitude_stderr: T,
    pub offset: T,
    pub offset_stderr: T,
    /// χ² under the binomial weights.
    pub rss: T,
    pub dof: usize,
    /// The data do not constrain a finite decay time.
    pub failed: bool,
    pub failure_reason: Option<String>,
}

struct ExpDecay<'a, T> {
    t: &'a [T],
    y: &'a [T],
    /// 1/σ per delay
    w: Vec<T>,
}

// params: [A, ln T1, B]
impl<T: Scalar> LeastSquaresProblem<T> for ExpDecay<'_, T> {
    fn n_params(&self) -> usize {
        3
    }

    fn n_residuals(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[T], out: &mut [T]) {
        let t1 = p[1].exp();
        for (k, (t, y)) in self.t.iter().zip(self.y).enumerate() {
            out[k] = (p[0] * (-*t / t1).exp() + p[2] - *y) * self.w[k];
        }
    }

    fn jacobian(&self, p: &[T], out: &mut [T]) {
        let t1 = p[1].exp();
        for (k, t) in self.t.iter().enumerate() {
            let (e, w) = ((-*t / t1).exp(), self.w[k]);
            out[3 * k] = e * w;
            out[3 * k + 1] = p[0] * e * *t / t1 * w;
            out[3 * k + 2] = w;
        }
    }
}

/// Closed-form linear least squares for `(A, B)` at fixed `T1`.
fn linear_amplitudes<T: Scalar>(t: &[T], y: &[T], t1: T) -> Option<(T, T, T)> {
    let n = T::of_usize(t.len());
    let e: Vec<T> = t.iter().map(|v| (-*v / t1).exp()).collect();
    let se: T = e.iter().copied().sum();
    let see: T = e.iter().map(|v| *v * *v).sum();
    let sy: T = y.iter().copied().sum();
    let sey: T = e.iter().zip(y).map(|(a, b)| *a * *b).sum();
    let det = n * see - se * se;
    if !(det.abs() > T::epsilon() * n * see) {
        return None;
    }
    let a = (n * sey - se * sy) / det;
    let b = (sy - a * se) / n;
    let rss = e
        .iter()
        .zip(y)
        .map(|(ei, yi)| (a * *ei + b - *yi).powi(2))
        .sum();
    Some((a, b, rss))
}

/// Fits `A·exp(−t/T1) + B` to a decay curve.
///
/// The starting point comes from a scan over log-spaced `T1` candidates with
/// `(A, B)` solved linearly at each; Levenberg–Marquardt then refines all three
/// parameters (with `T1` in log space so it stays positive). The refinement is
/// then repeated with binomial weights `σ² = p(1 − p)/shots` taken from the
/// fitted populations, so uncertainties come from `(JᵀWJ)⁻¹`, inflated by the
/// reduced χ² when the scatter exceeds shot noise.
///
/// Degenerate data (no decay, or a decay time far beyond the longest delay) are
/// reported through `failed` rather than an error.
pub fn fit_decay<T: Scalar>(curve: &DecayCurve<T>) -> Result<DecayFit<T>> {
    let (t, y) = (&curve.delays, &curve.excited_population);
    if t.len() < 4 {
        return invalid(format!(
            "decay fit needs at least 4 delays, got {}",
            t.len()
        ));
    }
    if y.iter().any(|p| !(*p >= T::zero() && *p <= T::one())) {
        return invalid("populations must lie in [0, 1]");
    }
    let t_min = t
        .iter()
        .copied()
        .fold(T::infinity(), T::min)
        .max(T::lit(1e-6));
    let t_max = t.iter().copied().fold(T::zero(), T::max);
    let dof = t.len() - 3;

    let failure = |reason: &str, t1: T, a: T, b: T, rss: T| DecayFit {
        t1,
        t1_stderr: T::infinity(),
        amplitude: a,
        amplitude_stderr: T::infinity(),
        offset: b,
        offset_stderr: T::infinity(),
        rss,
        dof,
        failed: true,
        failure_reason: Some(reason.to_string()),
    };

    let mean = y.iter().copied().sum::<T>() / T::of_usize(y.len());
    if y.iter().all(|v| (*v - mean).abs() <= T::epsilon()) {
        return Ok(failure(
            "constant populations",
            T::infinity(),
            T::zero(),
            mean,
            T::zero(),
        ));
    }

    // Coarse scan from t_min/10 to 100 t_max.
    let (lo, hi) = ((t_min / T::lit(10.0)).ln(), (t_max * T::lit(100.0)).ln());
    let n_scan = 121;
    let mut best: Option<(T, T, T, T)> = None;
    for k in 0..n_scan {
        let t1 = (lo + (hi - lo) * T::of_usize(k) / T::of_usize(n_scan - 1)).exp();
        if let Some((a, b, rss)) = linear_amplitudes(t, y, t1) {
            if a > T::zero() && best.is_none_or(|(_, _, _, r)| rss < r) {
                best = Some((t1, a, b, rss));
            }
        }
    }
    let Some((t1_0, a0, b0, rss0)) = best else {
        return Ok(failure(
            "populations do not decay",
            T::infinity(),
            T::zero(),
            mean,
            T::zero(),
        ));
    };

    let mut problem = ExpDecay {
        t,
        y,
        w: vec![T::one(); t.len()],
    };
    let rep = levenberg_marquardt(&problem, &[a0, t1_0.ln(), b0], &LmOptions::default());
    if !(rep.rss <= rss0) || !rep.params[1].exp().is_finite() {
        return Ok(failure("refinement diverged", t1_0, a0, b0, rss0));
    }
    let shots = T::lit(curve.shots_per_delay as f64);
    let floor = T::lit(0.5) / shots;
    let mut rep = rep;
    for _ in 0..2 {
        let (a, t1, b) = (rep.params[0], rep.params[1].exp(), rep.params[2]);
        problem.w = t
            .iter()
            .map(|v| {
                let p = (a * (-*v / t1).exp() + b).max(floor).min(T::one() - floor);
                (shots / (p * (T::one() - p))).sqrt()
            })
            .collect();
        let next = levenberg_marquardt(&problem, &rep.params, &LmOptions::default());
        if !next.params[1].exp().is_finite() {
            break;
        }
        rep = next;
    }
    let (a, t1, b) = (rep.params[0], rep.params[1].exp(), rep.params[2]);
    let birge = (rep.rss / T::of_usize(dof.max(1))).max(T::one());
    let cov = rep
        .unscaled_covariance()
        .map(|c| c.into_iter().map(|v| v * birge).collect::<Vec<_>>());
    let se = |i: usize| {
        cov.as_ref()
            .map_or(T::infinity(), |c| c[i * 3 + i].max(T::zero()).sqrt())
    };
    let mut fit = DecayFit {
        t1,
        t1_stderr: t1 * se(1),
        amplitude: a,
        amplitude_stderr: se(0),
        offset: b,
        offset_stderr: se(2),
        rss: rep.rss,
        dof,
        failed: false,
        failure_reason: None,
    };
    let reason = if !(a > T::zero()) {
        Some("non-positive amplitude")
    } else if t1 > T::lit(10.0) * t_max {
        Some("decay time unbounded by the delay range")
    } else if !rep.converged {
        Some("did not converge")
    } else {
        None
    };
    if let Some(r) = reason {
        fit.failed = true;
        fit.failure_reason = Some(r.to_string());
    }
    Ok(fit)
}
