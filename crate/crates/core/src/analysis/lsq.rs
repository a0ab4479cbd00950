//! Dense Levenberg–Marquardt least squares with Marquardt diagonal scaling.

use crate::scalar::Scalar;

/// A residual vector `r(p)` and its Jacobian. Residuals should already carry
/// any weighting.
pub trait LeastSquaresProblem<T> {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[T], out: &mut [T]);
    /// Row-major `n_residuals × n_params`.
    fn jacobian(&self, params: &[T], out: &mut [T]);
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    /// Relative reduction of the residual sum of squares.
    pub ftol: T,
    /// Relative step size.
    pub xtol: T,
    /// Infinity norm of the gradient `Jᵀr`.
    pub gtol: T,
    pub initial_lambda: T,
}

impl<T: Scalar> Default for LmOptions<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            max_iterations: 500,
            ftol: (eps * T::lit(1e4)).max(T::lit(1e-15)),
            xtol: (eps * T::lit(1e4)).max(T::lit(1e-15)),
            gtol: eps * T::lit(10.0),
            initial_lambda: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport<T> {
    pub params: Vec<T>,
    /// Residual sum of squares at `params`.
    pub rss: T,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀJ` at `params`, row-major.
    pub jtj: Vec<T>,
}

impl<T: Scalar> LmReport<T> {
    /// `(JᵀJ)⁻¹`, or `None` when the normal matrix is singular.
    pub fn unscaled_covariance(&self) -> Option<Vec<T>> {
        invert_spd(&self.jtj, self.params.len())
    }

    /// `s² (JᵀJ)⁻¹` with `s² = rss / dof`.
    pub fn scaled_covariance(&self, dof: usize) -> Option<Vec<T>> {
        let s2 = if dof > 0 {
            self.rss / T::of_usize(dof)
        } else {
            T::zero()
        };
        self.unscaled_covariance()
            .map(|c| c.into_iter().map(|v| v * s2).collect())
    }
}

pub fn levenberg_marquardt<T: Scalar, P: LeastSquaresProblem<T>>(
    problem: &P,
    initial: &[T],
    options: &LmOptions<T>,
) -> LmReport<T> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    assert_eq!(
        initial.len(),
        n,
        "initial parameter vector has wrong length"
    );

    let mut params = initial.to_vec();
    let mut r = vec![T::zero(); m];
    let mut jac = vec![T::zero(); m * n];
    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); m];

    problem.residuals(&params, &mut r);
    let mut rss = sum_sq(&r);
    let mut lambda = options.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    let (mut jtj, mut grad) = (vec![T::zero(); n * n], vec![T::zero(); n]);
    let mut refresh = true;
    while iterations < options.max_iterations {
        if refresh {
            problem.jacobian(&params, &mut jac);
            normal_equations(&jac, &r, m, n, &mut jtj, &mut grad);
            refresh = false;
        }
        let gmax = grad.iter().fold(T::zero(), |a, g| a.max(g.abs()));
        if gmax <= options.gtol * (T::one() + rss) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut damped = jtj.clone();
        for i in 0..n {
            let d = jtj[i * n + i].max(T::lit(1e-12) * (T::one() + jtj[i * n + i]));
            damped[i * n + i] = jtj[i * n + i] + lambda * d;
        }
        let neg_grad: Vec<T> = grad.iter().map(|g| -*g).collect();
        let Some(delta) = solve_spd(&damped, &neg_grad, n) else {
            lambda = lambda * T::lit(10.0);
            if lambda > T::lit(1e20) {
                break;
            }
            continue;
        };
        for i in 0..n {
            trial[i] = params[i] + delta[i];
        }
        problem.residuals(&trial, &mut r_trial);
        let rss_trial = sum_sq(&r_trial);
        if rss_trial.is_finite() && rss_trial <= rss {
            let reduction = rss - rss_trial;
            let step_small = delta
                .iter()
                .zip(&params)
                .all(|(d, p)| d.abs() <= options.xtol * (p.abs() + options.xtol));
            params.copy_from_slice(&trial);
            std::mem::swap(&mut r, &mut r_trial);
            rss = rss_trial;
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
            refresh = true;
            if reduction <= options.ftol * rss || step_small {
                converged = true;
                break;
            }
        } else {
            lambda = lambda * T::lit(10.0);
            if lambda > T::lit(1e20) {
                // no descent direction left: at a (numerical) minimum
                converged = true;
                break;
            }
        }
    }

    problem.jacobian(&params, &mut jac);
    normal_equations(&jac, &r, m, n, &mut jtj, &mut grad);
    LmReport {
        params,
        rss,
        iterations,
        converged,
        jtj,
    }
}

fn sum_sq<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum()
}

fn normal_equations<T: Scalar>(
    jac: &[T],
    r: &[T],
    m: usize,
    n: usize,
    jtj: &mut [T],
    grad: &mut [T],
) {
    jtj.iter_mut().for_each(|v| *v = T::zero());
    grad.iter_mut().for_each(|v| *v = T::zero());
    for k in 0..m {
        let row = &jac[k * n..(k + 1) * n];
        for i in 0..n {
            grad[i] = grad[i] + row[i] * r[k];
            for j in i..n {
                jtj[i * n + j] = jtj[i * n + j] + row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            jtj[i * n + j] = jtj[j * n + i];
        }
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve<T: Scalar>(l: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i * n + k] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k * n + i] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    y
}

pub fn solve_spd<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let l = cholesky(a, n)?;
    let x = cholesky_solve(&l, b, n);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub fn invert_spd<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[col] = T::one();
        let x = cholesky_solve(&l, &e, n);
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}
