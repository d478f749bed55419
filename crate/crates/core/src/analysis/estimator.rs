//! Phase estimates from the record integral and their ensemble summaries.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::circular::{summarize, HolevoSummary};
use crate::controller::Scheme;
use crate::error::{Error, Result};
use crate::modeshape::ModeShape;
use crate::scalar::{wrap_pi, Real};
use crate::trajectory::TrajectoryRecord;

/// `R = Σ e^{iφ_k} √u_k V_dt,k` over a stored record.
pub fn compute_r<T: Real>(record: &TrajectoryRecord<T>, mode: &ModeShape<T>) -> Result<Complex<T>> {
    if !record.grid.same_as(&mode.grid) || mode.u.len() < record.len() {
        return Err(Error::GridMismatch(format!(
            "record of {} steps at dt={} vs mode of {} points at dt={}",
            record.len(),
            record.grid.dt(),
            mode.u.len(),
            mode.grid.dt()
        )));
    }
    let mut r = Complex::new(T::zero(), T::zero());
    for k in 0..record.len() {
        let (s, c) = record.phi[k].sin_cos();
        r += Complex::new(c, s) * (mode.u[k].sqrt() * record.v_dt[k]);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    /// `arg R` in `(-π, π]`; zero for null shots.
    pub theta_hat: f64,
    pub r_mag: f64,
    pub theta_true: f64,
    pub scheme: Scheme,
    /// `R = 0`: no estimate exists.
    pub null: bool,
}

impl PhaseEstimate {
    pub fn from_r(r: Complex<f64>, theta_true: f64, scheme: Scheme) -> Self {
        let r_mag = r.norm();
        let null = !(r_mag > 0.0);
        let theta_hat = if null { 0.0 } else { wrap_pi(r.arg()) };
        Self { theta_hat, r_mag, theta_true, scheme, null }
    }

    /// `θ̂ - Θ` folded into `(-π, π]`.
    pub fn error(&self) -> f64 {
        wrap_pi(self.theta_hat - self.theta_true)
    }
}

/// Per-scheme summary of an ensemble of estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub scheme: Scheme,
    pub n_shots: usize,
    pub null_count: usize,
    pub null_rate: f64,
    /// `None` when every shot was null.
    pub holevo: Option<HolevoSummary>,
    #[serde(with = "crate::serde_float")]
    pub r_mag_mean: f64,
    #[serde(with = "crate::serde_float")]
    pub r_mag_var: f64,
}

impl EnsembleResult {
    pub fn from_estimates(
        scheme: Scheme,
        estimates: &[PhaseEstimate],
        bootstrap: Option<(usize, u64)>,
    ) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::EmptySample);
        }
        let errors: Vec<f64> = estimates.iter().filter(|e| !e.null).map(PhaseEstimate::error).collect();
        let null_count = estimates.len() - errors.len();
        let holevo = if errors.is_empty() { None } else { Some(summarize(&errors, bootstrap)?) };
        let (r_mag_mean, r_mag_var) = mean_var(estimates.iter().map(|e| e.r_mag));
        Ok(Self {
            scheme,
            n_shots: estimates.len(),
            null_count,
            null_rate: null_count as f64 / estimates.len() as f64,
            holevo,
            r_mag_mean,
            r_mag_var,
        })
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { f64::NAN };
    (mean, var)
}

/// Standard error of a sample variance (normal-kurtosis free form).
pub fn variance_standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mean, var) = mean_var(xs.iter().copied());
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::modeshape::{flat_gamma, mode_shape_from_gamma};
    use crate::noise::NoisePath;
    use crate::state::{BlochVector, DensityMatrix};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn record_for(mode: &ModeShape<f64>, phi: f64, v: impl Fn(usize) -> f64) -> TrajectoryRecord<f64> {
        let n = mode.grid.n_steps();
        TrajectoryRecord {
            grid: mode.grid,
            v_dt: (0..n).map(v).collect(),
            phi: vec![phi; n],
            bloch: vec![BlochVector::new(0.0, 0.0, 0.0); n],
            dw_used: NoisePath { seed: 0, dt: mode.grid.dt(), dw: vec![0.0; n] },
            final_state: DensityMatrix::maximally_mixed(),
        }
    }

    fn mode() -> ModeShape<f64> {
        let g = TimeGrid::new(1e-9, 13e-6).unwrap();
        mode_shape_from_gamma(&flat_gamma(10e-6, 1.4e6, g).unwrap())
    }

    #[test]
    fn silent_record_is_null() {
        let m = mode();
        let r = compute_r(&record_for(&m, 0.3, |_| 0.0), &m).unwrap();
        assert_eq!(r, Complex::new(0.0, 0.0));
        let e = PhaseEstimate::from_r(r, 0.0, Scheme::Adaptive);
        assert!(e.null);
    }

    #[test]
    fn frozen_dipole_is_recovered() {
        let m = mode();
        let dt = m.grid.dt();
        for theta in [0.0, 0.4, 2.5, -1.7, PI] {
            let rho = DensityMatrix::equatorial(theta);
            // noiseless record 2√γ Re(⟨σ⟩ e^{-iφ}) dt with φ along the dipole
            let phi = theta;
            let lowering = rho.expect_lowering();
            let rec = record_for(&m, phi, |k| {
                2.0 * m.u[k].sqrt() * (lowering * Complex::from_polar(1.0, -phi)).re * dt
            });
            let est = PhaseEstimate::from_r(compute_r(&rec, &m).unwrap(), theta, Scheme::Homodyne);
            assert!(est.error().abs() < 1e-9, "theta={theta} got {}", est.theta_hat);

            // the quadrature orthogonal to the dipole carries no mean signal
            let phi = theta + FRAC_PI_2;
            let r = compute_r(
                &record_for(&m, phi, |k| 2.0 * m.u[k].sqrt() * (lowering * Complex::from_polar(1.0, -phi)).re * dt),
                &m,
            )
            .unwrap();
            assert!(r.norm() < 1e-9);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let m = mode();
        let g2 = TimeGrid::new(2e-9, 13e-6).unwrap();
        let m2 = mode_shape_from_gamma(&flat_gamma(10e-6, 1.4e6, g2).unwrap());
        let rec = record_for(&m2, 0.0, |_| 1e-6);
        assert!(matches!(compute_r(&rec, &m), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn ensemble_counts_nulls() {
        let mk = |theta_hat: f64, null: bool| PhaseEstimate {
            theta_hat,
            r_mag: if null { 0.0 } else { 1.0 },
            theta_true: 0.0,
            scheme: Scheme::Adaptive,
            null,
        };
        let est = vec![mk(0.1, false), mk(-0.1, false), mk(0.0, true), mk(0.0, false)];
        let res = EnsembleResult::from_estimates(Scheme::Adaptive, &est, None).unwrap();
        assert_eq!(res.null_count, 1);
        assert_eq!(res.n_shots, 4);
        assert!(res.holevo.unwrap().holevo < 0.01);
        let all_null = EnsembleResult::from_estimates(Scheme::Adaptive, &[mk(0.0, true)], None).unwrap();
        assert!(all_null.holevo.is_none());
    }

    #[test]
    fn variance_error_matches_gaussian_form() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::noise::rng_from_seed(4);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let se = variance_standard_error(&xs);
        let expected = (2.0f64 / 100_000.0).sqrt();
        assert!((se - expected).abs() / expected < 0.05);
    }
}
