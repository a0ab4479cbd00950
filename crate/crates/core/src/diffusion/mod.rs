//! Interacting-defect Monte Carlo: a TLS at the center of a thin dielectric
//! cuboid, surrounded by randomly placed thermal fluctuators whose telegraphic
//! flips shift the TLS transition frequency by `2 g∥`.
//!
//! Time advances in fixed steps `dt`; in every step each fluctuator flips
//! independently with probability `Γ·dt`. Flip rates are symmetric (the same
//! rate for excitation and relaxation).

use rand::Rng;
use rand_distr::{Distribution, Poisson, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::physmodel::{dipole_dipole_gzz, DipoleMoment};
use crate::rng::{substream, SimRng};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Highest fluctuator density for which fluctuator–fluctuator interactions can
/// be neglected, GHz⁻¹·μm⁻³.
pub const MAX_NONINTERACTING_DENSITY: f64 = 5.0e4;

/// Simulation parameters. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig<T> {
    /// Cuboid edge lengths in nm; the first axis is the film normal.
    pub cuboid_dims: [T; 3],
    /// Fluctuators per GHz per μm³.
    pub tf_density: T,
    /// Energy window (GHz) over which the density is integrated.
    pub energy_bandwidth: T,
    /// eÅ
    pub p_max: T,
    pub eps_r: T,
    /// hours
    pub dt: T,
    /// hours
    pub t_sim: T,
    /// hr⁻¹; defaults to `1/(2 t_sim)`.
    pub gamma_min: Option<T>,
    /// hr⁻¹; defaults to `1/dt`.
    pub gamma_max: Option<T>,
    pub rng_seed: u64,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            cuboid_dims: [T::lit(3.0), T::lit(1000.0), T::lit(1000.0)],
            tf_density: T::lit(1.0e4),
            energy_bandwidth: T::one(),
            p_max: T::lit(1.5),
            eps_r: T::lit(10.0),
            dt: T::lit(0.25),
            t_sim: T::lit(30.0),
            gamma_min: None,
            gamma_max: None,
            rng_seed: 0,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn with_density(density: T) -> Self {
        Self {
            tf_density: density,
            ..Self::default()
        }
    }

    pub fn gamma_min(&self) -> T {
        self.gamma_min
            .unwrap_or_else(|| T::one() / (T::lit(2.0) * self.t_sim))
    }

    pub fn gamma_max(&self) -> T {
        self.gamma_max.unwrap_or_else(|| self.dt.recip())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_sim / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Cuboid volume in μm³.
    pub fn volume_um3(&self) -> T {
        self.cuboid_dims
            .iter()
            .fold(T::one(), |v, d| v * *d / T::lit(1000.0))
    }

    /// Expected fluctuator count `density · V · bandwidth`.
    pub fn expected_count(&self) -> T {
        self.tf_density * self.volume_um3() * self.energy_bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self
            .cuboid_dims
            .iter()
            .any(|d| !(*d > T::zero()) || !d.is_finite())
        {
            return cfg("cuboid_dims must be positive".into());
        }
        if !(self.tf_density >= T::zero()) || !self.tf_density.is_finite() {
            return cfg(format!("tf_density must be >= 0, got {}", self.tf_density));
        }
        if !(self.energy_bandwidth > T::zero()) {
            return cfg("energy_bandwidth must be positive".into());
        }
        if !(self.p_max > T::zero()) {
            return cfg("p_max must be positive".into());
        }
        if !(self.eps_r >= T::one()) {
            return cfg("eps_r must be >= 1".into());
        }
        if !(self.dt > T::zero()) || !(self.t_sim > T::zero()) {
            return cfg("dt and t_sim must be positive".into());
        }
        let steps = self.t_sim / self.dt;
        if (steps - steps.round()).abs() > T::lit(1e-6) * steps.max(T::one())
            || steps.round() < T::one()
        {
            return cfg(format!(
                "t_sim / dt must be a positive integer, got {}",
                steps
            ));
        }
        let (lo, hi) = (self.gamma_min(), self.gamma_max());
        if !(lo > T::zero() && lo < hi) {
            return cfg(format!("need 0 < gamma_min < gamma_max, got {lo} and {hi}"));
        }
        if hi * self.dt > T::one() + T::lit(1e-9) {
            return cfg(format!(
                "gamma_max = {hi} exceeds 1/dt; flip probability would exceed 1"
            ));
        }
        Ok(())
    }
}

/// A thermal fluctuator coupled to the central TLS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fluctuator<T> {
    /// nm, cuboid coordinates
    pub position: [T; 3],
    pub dipole: DipoleMoment<T>,
    /// hr⁻¹
    pub flip_rate: T,
    /// +1 or −1
    pub state: i8,
    /// MHz
    pub g_parallel: T,
}

/// The central TLS dipole and its fluctuator bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population<T> {
    pub tls_dipole: DipoleMoment<T>,
    pub fluctuators: Vec<Fluctuator<T>>,
}

/// Inverse-CDF sample of the normalised `1/Γ` density on `[gamma_min, gamma_max]`:
/// `Γ = Γ_min (Γ_max/Γ_min)^u`.
pub fn sample_flip_rate<T: Scalar>(u: T, gamma_min: T, gamma_max: T) -> Result<T> {
    if !(gamma_min > T::zero() && gamma_min < gamma_max) || !gamma_max.is_finite() {
        return invalid(format!(
            "flip-rate bounds must satisfy 0 < min < max, got {gamma_min}, {gamma_max}"
        ));
    }
    if !(u >= T::zero() && u <= T::one()) {
        return invalid(format!("uniform variate must lie in [0, 1], got {u}"));
    }
    if u == T::one() {
        return Ok(gamma_max);
    }
    Ok(gamma_min * (gamma_max / gamma_min).powf(u))
}

/// Draws a dipole magnitude from the quarter-circle density
/// `ρ₀ √(1 − (p/p_max)²)` on `[0, p_max]` by rejection.
pub fn sample_dipole_magnitude<T: Scalar, R: Rng + ?Sized>(rng: &mut R, p_max: T) -> T {
    loop {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        if y * y <= 1.0 - x * x {
            return T::lit(x) * p_max;
        }
    }
}

fn random_orientation<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> [T; 3] {
    let v: [f64; 3] = UnitSphere.sample(rng);
    [T::lit(v[0]), T::lit(v[1]), T::lit(v[2])]
}

/// Places a Poisson number of fluctuators uniformly in the cuboid and
/// computes each one's coupling to a TLS at the cuboid center.
///
/// The TLS dipole magnitude is drawn from the same distribution as the
/// fluctuators' and points along the film normal; fluctuator orientations are
/// uniform on the sphere. Couplings use the slow-fluctuator approximation
/// `g∥ ≈ g_zz`.
pub fn populate_fluctuators<T: Scalar, R: Rng + ?Sized>(
    config: &SimConfig<T>,
    rng: &mut R,
) -> Result<Population<T>> {
    config.validate()?;
    let tls_dipole = DipoleMoment::new(
        sample_dipole_magnitude(rng, config.p_max),
        [T::one(), T::zero(), T::zero()],
    )?;
    let mean = config.expected_count().to_f64_lossy();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::Config(format!("fluctuator count: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    let half = T::lit(0.5);
    let center = config.cuboid_dims.map(|d| d * half);
    let (gmin, gmax) = (config.gamma_min(), config.gamma_max());
    let mut fluctuators = Vec::with_capacity(count);
    while fluctuators.len() < count {
        let position = config.cuboid_dims.map(|d| d * T::lit(rng.random::<f64>()));
        let separation = [
            position[0] - center[0],
            position[1] - center[1],
            position[2] - center[2],
        ];
        let dipole = DipoleMoment::new(
            sample_dipole_magnitude(rng, config.p_max),
            random_orientation(rng),
        )?;
        let flip_rate = sample_flip_rate(T::lit(rng.random::<f64>()), gmin, gmax)?;
        let state = if rng.random::<bool>() { 1 } else { -1 };
        let g_parallel = match dipole_dipole_gzz(&tls_dipole, &dipole, separation, config.eps_r) {
            Ok(g) => g,
            // a fluctuator exactly on the TLS site; redraw
            Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        fluctuators.push(Fluctuator {
            position,
            dipole,
            flip_rate,
            state,
            g_parallel,
        });
    }
    Ok(Population {
        tls_dipole,
        fluctuators,
    })
}

/// Advances every fluctuator by one time step and returns the updated offset
/// (MHz). A flip from state `s` to `−s` shifts the TLS by `g∥·(−s − s)`.
pub fn step<T: Scalar, R: Rng + ?Sized>(
    fluctuators: &mut [Fluctuator<T>],
    current_offset: T,
    dt: T,
    rng: &mut R,
) -> Result<T> {
    let mut offset = current_offset;
    for f in fluctuators.iter_mut() {
        let p = f.flip_rate * dt;
        if p > T::one() + T::lit(1e-9) {
            return Err(Error::Config(format!(
                "flip probability {p} exceeds 1 (rate {} with dt {dt})",
                f.flip_rate
            )));
        }
        let u: f64 = rng.random();
        if T::lit(u) < p {
            let old = f.state;
            f.state = -old;
            offset = offset + f.g_parallel * T::lit(f64::from(f.state - old));
        }
    }
    Ok(offset)
}

/// Evolves `population` for `config.n_steps()` steps from `ΔE = 0`.
pub fn evolve<T: Scalar, R: Rng + ?Sized>(
    population: &mut Population<T>,
    config: &SimConfig<T>,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    let n = config.n_steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut offset = T::zero();
    values.push(offset);
    for _ in 0..n {
        offset = step(&mut population.fluctuators, offset, config.dt, rng)?;
        values.push(offset);
    }
    Trajectory::uniform(config.dt, values)
}

fn trajectory_from_stream<T: Scalar>(
    config: &SimConfig<T>,
    seed: u64,
    stream: u64,
) -> Result<Trajectory<T>> {
    let mut rng: SimRng = substream(seed, stream);
    let mut population = populate_fluctuators(config, &mut rng)?;
    evolve(&mut population, config, &mut rng)
}

/// One trajectory with a freshly drawn fluctuator population.
pub fn run_trajectory<T: Scalar>(config: &SimConfig<T>, seed: u64) -> Result<Trajectory<T>> {
    trajectory_from_stream(config, seed, 0)
}

/// `n` trajectories, each with an independent fluctuator population drawn
/// from substream `k` of `master_seed`. Trajectories are generated in
/// parallel; the result does not depend on scheduling.
pub fn run_ensemble<T: Scalar>(
    config: &SimConfig<T>,
    n: usize,
    master_seed: u64,
) -> Result<Vec<Trajectory<T>>> {
    if n == 0 {
        return invalid("ensemble size must be at least 1");
    }
    config.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|k| trajectory_from_stream(config, master_seed, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn telegraph_population(g: f64, rate: f64) -> Population<f64> {
        Population {
            tls_dipole: DipoleMoment::new(1.0, [1.0, 0.0, 0.0]).unwrap(),
            fluctuators: vec![Fluctuator {
                position: [1.5, 500.0, 530.0],
                dipole: DipoleMoment::new(1.0, [0.0, 0.0, 1.0]).unwrap(),
                flip_rate: rate,
                state: 1,
                g_parallel: g,
            }],
        }
    }

    #[test]
    fn flip_rate_inverse_cdf() {
        let (lo, hi): (f64, f64) = (1.0 / 60.0, 4.0);
        assert_eq!(sample_flip_rate(0.0, lo, hi).unwrap(), lo);
        assert_eq!(sample_flip_rate(1.0, lo, hi).unwrap(), hi);
        assert_relative_eq!(
            sample_flip_rate(0.5, lo, hi).unwrap(),
            (lo * hi).sqrt(),
            max_relative = 1e-12
        );
        assert!(sample_flip_rate(0.5, 0.0, hi).is_err());
        assert!(sample_flip_rate(0.5, hi, lo).is_err());
        assert!(sample_flip_rate(1.5, lo, hi).is_err());
    }

    #[test]
    fn dipole_magnitudes_stay_in_range() {
        let mut rng = substream(1, 0);
        for _ in 0..10_000 {
            let p: f64 = sample_dipole_magnitude(&mut rng, 1.5);
            assert!((0.0..=1.5).contains(&p));
        }
    }

    #[test]
    fn default_config_geometry() {
        let c = SimConfig::<f64>::default();
        c.validate().unwrap();
        assert_eq!(c.n_steps(), 120);
        assert_relative_eq!(c.volume_um3(), 0.003, max_relative = 1e-12);
        assert_relative_eq!(c.expected_count(), 30.0, max_relative = 1e-12);
        assert_relative_eq!(c.gamma_min(), 1.0 / 60.0);
        assert_relative_eq!(c.gamma_max(), 4.0);
        // spacing at the interaction ceiling, ~25 nm
        let ceiling = SimConfig::<f64>::with_density(5e4);
        let spacing = (ceiling.volume_um3() / ceiling.expected_count()).cbrt() * 1e3;
        assert!((spacing - 27.1).abs() < 0.5, "{spacing}");
    }

    #[test]
    fn invalid_configs() {
        let bad_rate = SimConfig::<f64> {
            gamma_max: Some(8.0),
            ..Default::default()
        };
        assert!(bad_rate.validate().is_err());
        let inverted = SimConfig::<f64> {
            gamma_min: Some(5.0),
            ..Default::default()
        };
        assert!(inverted.validate().is_err());
        let fractional = SimConfig::<f64> {
            t_sim: 30.1,
            ..Default::default()
        };
        assert!(fractional.validate().is_err());
    }

    #[test]
    fn empty_bath() {
        let c = SimConfig::<f64>::with_density(0.0);
        let pop = populate_fluctuators(&c, &mut substream(3, 0)).unwrap();
        assert!(pop.fluctuators.is_empty());
        let t = run_trajectory(&c, 3).unwrap();
        assert_eq!(t.len(), 121);
        assert!(t.values().iter().all(|v| *v == 0.0));
        assert_eq!(step(&mut [], 2.5, 0.25, &mut substream(0, 0)).unwrap(), 2.5);
    }

    #[test]
    fn populated_fluctuators_respect_bounds() {
        let c = SimConfig::<f64>::with_density(3e4);
        let pop = populate_fluctuators(&c, &mut substream(9, 0)).unwrap();
        assert!(!pop.fluctuators.is_empty());
        for f in &pop.fluctuators {
            for k in 0..3 {
                assert!(f.position[k] >= 0.0 && f.position[k] <= c.cuboid_dims[k]);
            }
            assert!(f.flip_rate >= c.gamma_min() && f.flip_rate <= c.gamma_max());
            assert!(f.dipole.magnitude <= 1.5);
            assert!(f.state == 1 || f.state == -1);
            let n: f64 = f.dipole.orientation.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_flip_and_reversibility() {
        let mut pop = telegraph_population(7.0, 4.0);
        let mut rng = substream(0, 0);
        let once = step(&mut pop.fluctuators, 0.0, 0.25, &mut rng).unwrap();
        assert_eq!(once.abs(), 14.0);
        let twice = step(&mut pop.fluctuators, once, 0.25, &mut rng).unwrap();
        assert_eq!(twice, 0.0);
    }

    #[test]
    fn flip_probability_above_one_is_rejected() {
        let mut pop = telegraph_population(1.0, 8.0);
        assert!(step(&mut pop.fluctuators, 0.0, 0.25, &mut substream(0, 0)).is_err());
    }

    #[test]
    fn frozen_bath_gives_zero_trajectory() {
        let c = SimConfig::<f64>::default();
        let mut pop = populate_fluctuators(&c, &mut substream(5, 0)).unwrap();
        for f in &mut pop.fluctuators {
            f.flip_rate = 0.0;
        }
        let t = evolve(&mut pop, &c, &mut substream(5, 1)).unwrap();
        assert!(t.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_fluctuator_is_telegraphic() {
        let c = SimConfig::<f64>::default();
        let mut pop = telegraph_population(12.0, 1.0);
        let t = evolve(&mut pop, &c, &mut substream(2, 0)).unwrap();
        let levels: Vec<f64> = t.values().to_vec();
        assert!(levels.iter().all(|v| *v == 0.0 || *v == -24.0));
        assert!(levels.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn trajectories_are_deterministic() {
        let c = SimConfig::<f64>::default();
        let a = run_trajectory(&c, 17).unwrap();
        assert_eq!(a, run_trajectory(&c, 17).unwrap());
        assert_eq!(a.len(), 121);
        assert_eq!(a.values()[0], 0.0);
        let ens = run_ensemble(&c, 1, 17).unwrap();
        assert_eq!(ens[0], a);
        let e1 = run_ensemble(&c, 5, 99).unwrap();
        assert_eq!(e1, run_ensemble(&c, 5, 99).unwrap());
    }

    #[test]
    fn scaling_couplings_scales_trajectory() {
        let c = SimConfig::<f64>::default();
        let mut rng = substream(21, 0);
        let pop = populate_fluctuators(&c, &mut rng).unwrap();
        let mut scaled = pop.clone();
        for f in &mut scaled.fluctuators {
            f.g_parallel *= 4.0;
        }
        let base = evolve(&mut pop.clone(), &c, &mut substream(21, 1)).unwrap();
        let big = evolve(&mut scaled, &c, &mut substream(21, 1)).unwrap();
        for (a, b) in base.values().iter().zip(big.values()) {
            assert_eq!(*b, 4.0 * a);
        }
    }
}
