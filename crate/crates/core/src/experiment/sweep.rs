//! Heterodyne-frequency sweep and the isotropy of the weighted noise
//! integral `Z = Σ e^{iφ}√u dW`.

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::circular::summarize;
use crate::controller::Scheme;
use crate::ensemble::par_map_indexed;
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::runner::RunContext;
use crate::modeshape::ModeShape;
use crate::noise::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub f_het: f64,
    pub n: usize,
    pub sharpness: f64,
    pub sharpness_se: f64,
    /// Intrinsic efficiency `F = S / 0.5`.
    pub efficiency: f64,
    pub efficiency_se: f64,
    #[serde(with = "crate::serde_float")]
    pub holevo: f64,
}

/// Efficiency of heterodyne detection at each frequency. Every frequency
/// reuses the same per-shot noise streams, so differences between points
/// are not diluted by independent sampling noise.
pub fn sweep_heterodyne(cfg: &ExperimentConfig, f_set: &[f64]) -> Result<Vec<SweepPoint>> {
    if f_set.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::Config("sweep frequencies must be finite and >= 0".into()));
    }
    let base = ExperimentConfig { schemes: vec![Scheme::Heterodyne], diagnostics: false, ..cfg.clone() };
    f_set
        .iter()
        .map(|&f| {
            let ctx = RunContext::new(&ExperimentConfig { f_het: f, ..base.clone() })?;
            let total = base.thetas.len() * base.traj;
            let errors = par_map_indexed(total, base.workers, |j| {
                let (rec, _) = ctx.run_shot(Scheme::Heterodyne, j / base.traj, j % base.traj, None, false)?;
                Ok(rec.estimate())
            })?
            .into_iter()
            .filter(|e| !e.null)
            .map(|e| e.error())
            .collect::<Vec<_>>();
            let s = summarize(&errors, None)?;
            Ok(SweepPoint {
                f_het: f,
                n: s.n,
                sharpness: s.sharpness,
                sharpness_se: s.sharpness_se,
                efficiency: s.efficiency,
                efficiency_se: s.efficiency_se,
                holevo: s.holevo,
            })
        })
        .collect()
}

/// `|Σ e^{2iφ}u dt| / Σ u dt` for `φ = 2πft`: zero when the weighted noise
/// integral is rotationally uniform.
pub fn noise_anisotropy_exact(mode: &ModeShape<f64>, f_het: f64) -> f64 {
    let dt = mode.grid.dt();
    let n = mode.grid.n_steps();
    let (mut num, mut den) = (Complex::new(0.0, 0.0), 0.0);
    for k in 0..n {
        let phi = std::f64::consts::TAU * f_het * k as f64 * dt;
        num += Complex::from_polar(mode.u[k] * dt, 2.0 * phi);
        den += mode.u[k] * dt;
    }
    num.norm() / den
}

/// Sampled counterpart of [`noise_anisotropy_exact`]: draws `n_samples`
/// noise paths and returns `|⟨Z²⟩| / ⟨|Z|²⟩`.
pub fn noise_anisotropy_sampled(mode: &ModeShape<f64>, f_het: f64, n_samples: usize, seed: u64) -> f64 {
    let dt = mode.grid.dt();
    let n = mode.grid.n_steps();
    let sqdt = dt.sqrt();
    let weights: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::from_polar(mode.u[k].sqrt(), std::f64::consts::TAU * f_het * k as f64 * dt))
        .collect();
    let mut rng = rng_from_seed(seed);
    let (mut z2, mut zz) = (Complex::new(0.0, 0.0), 0.0);
    for _ in 0..n_samples {
        let mut z = Complex::new(0.0, 0.0);
        for w in &weights {
            let dw: f64 = StandardNormal.sample(&mut rng);
            z += w * (dw * sqdt);
        }
        z2 += z * z;
        zz += z.norm_sqr();
    }
    z2.norm() / zz
}
