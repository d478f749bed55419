//! Filter validation against simulated projective tomography.
//!
//! Each shot starts in one of the six axis eigenstates and is propagated
//! with the true parameters. A second filter sees only the record and the
//! applied pump phase, starting from its own prior and possibly wrong
//! parameters. At each check time the true state is measured once along a
//! round-robin axis; shots are binned by the filtered expectation along
//! that axis and the binned mean outcome is compared with the binned mean
//! prediction.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::controller::{ControllerConfig, FeedbackTables, PhaseController, Scheme};
use crate::ensemble::par_map_indexed;
use crate::error::{Error, Result};
use crate::noise::{derive_seed, rng_from_seed, GaussianNoise, StreamTag};
use crate::sme::{update_from_record, SimParams};
use crate::state::{BlochVector, DensityMatrix};
use crate::trajectory::{run_steps, Observer, StepView};

/// Prior the record-only filter starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prior {
    MaximallyMixed,
    /// The true initial state (self-consistency check).
    True,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Step indices at which the state is checked.
    pub check_steps: Vec<usize>,
    pub bin_centers: Vec<f64>,
    pub bin_half_width: f64,
    pub n_min: usize,
    /// Agreement threshold in standard errors.
    pub n_sigma: f64,
    pub prior: Prior,
}

impl ValidationConfig {
    /// Contiguous bins of width 0.4 centred on -0.8, -0.4, 0, 0.4, 0.8.
    pub fn standard(check_steps: Vec<usize>) -> Self {
        Self {
            check_steps,
            bin_centers: vec![-0.8, -0.4, 0.0, 0.4, 0.8],
            bin_half_width: 0.2,
            n_min: 30,
            n_sigma: 3.0,
            prior: Prior::MaximallyMixed,
        }
    }

    fn bin_of(&self, v: f64) -> Option<usize> {
        let last = self.bin_centers.len().checked_sub(1)?;
        self.bin_centers.iter().position(|c| v >= c - self.bin_half_width && v < c + self.bin_half_width).or_else(
            || (v == self.bin_centers[last] + self.bin_half_width).then_some(last),
        )
    }
}

pub fn axis_component(b: &BlochVector<f64>, axis: usize) -> f64 {
    match axis {
        0 => b.x,
        1 => b.y,
        _ => b.z,
    }
}

/// The six eigenstates of `σ_x, σ_y, σ_z`.
pub fn axis_eigenstates() -> [DensityMatrix<f64>; 6] {
    [
        DensityMatrix::equatorial(0.0),
        DensityMatrix::equatorial(PI),
        DensityMatrix::equatorial(FRAC_PI_2),
        DensityMatrix::equatorial(-FRAC_PI_2),
        DensityMatrix::excited(),
        DensityMatrix::ground(),
    ]
}

/// Runs the record-only filter next to the true state.
pub struct FilterObserver<'a> {
    params: &'a SimParams<f64>,
    filter: DensityMatrix<f64>,
    check_steps: &'a [usize],
    pub filtered: Vec<BlochVector<f64>>,
    pub truth: Vec<BlochVector<f64>>,
}

impl<'a> FilterObserver<'a> {
    pub fn new(filter_params: &'a SimParams<f64>, prior: DensityMatrix<f64>, check_steps: &'a [usize]) -> Self {
        let n = check_steps.len();
        Self {
            params: filter_params,
            filter: prior,
            check_steps,
            filtered: vec![BlochVector::new(f64::NAN, f64::NAN, f64::NAN); n],
            truth: vec![BlochVector::new(f64::NAN, f64::NAN, f64::NAN); n],
        }
    }
}

impl Observer<f64> for FilterObserver<'_> {
    fn observe(&mut self, s: &StepView<'_, f64>) {
        for (i, k) in self.check_steps.iter().enumerate() {
            if *k == s.k {
                self.filtered[i] = self.filter.bloch();
                self.truth[i] = s.rho_before.bloch();
            }
        }
        let dt = self.params.grid().dt();
        self.filter =
            update_from_record(self.params.integrator, &self.filter, s.gamma, self.params, s.phase.phasor, s.v_dt, dt);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationShot {
    pub axis: usize,
    /// Filtered expectation along `axis`, one per check time.
    pub predicted: Vec<f64>,
    /// Single projective outcome `±1` along `axis`, one per check time.
    pub outcome: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_validation_shots(
    true_params: &SimParams<f64>,
    filter_params: &SimParams<f64>,
    controller: &ControllerConfig<f64>,
    tables: Arc<FeedbackTables<f64>>,
    cfg: &ValidationConfig,
    n_shots: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ValidationShot>> {
    let tag = match controller.scheme {
        Scheme::Adaptive => StreamTag::Adaptive,
        Scheme::Heterodyne => StreamTag::Heterodyne,
        Scheme::Homodyne => StreamTag::Homodyne,
        Scheme::Replay => return Err(Error::InvalidParameter("validation needs a live scheme".into())),
    };
    if let Some(k) = cfg.check_steps.iter().find(|k| **k >= true_params.grid().n_steps()) {
        return Err(Error::IndexOutOfGrid { index: *k, len: true_params.grid().n_steps() });
    }
    let states = axis_eigenstates();
    let last = cfg.check_steps.iter().copied().max().unwrap_or(0) + 1;
    par_map_indexed(n_shots, workers, |i| {
        let mut tomo = rng_from_seed(derive_seed(master_seed, 0, i as u64, StreamTag::Tomography));
        let initial = states[tomo.random_range(0..states.len())];
        let prior = match cfg.prior {
            Prior::MaximallyMixed => DensityMatrix::maximally_mixed(),
            Prior::True => initial,
        };
        let mut obs = FilterObserver::new(filter_params, prior, &cfg.check_steps);
        let mut ctl = PhaseController::new(controller, tables.clone(), None)?;
        let mut noise = GaussianNoise::new(derive_seed(master_seed, 0, i as u64, tag), true_params.grid().dt());
        run_steps(true_params, &mut ctl, initial, &mut noise, last, &mut obs)?;
        let axis = i % 3;
        let predicted = obs.filtered.iter().map(|b| axis_component(b, axis)).collect();
        let outcome = obs
            .truth
            .iter()
            .map(|b| {
                let p_up = 0.5 * (1.0 + axis_component(b, axis));
                if tomo.random::<f64>() < p_up {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Ok(ValidationShot { axis, predicted, outcome })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub check_index: usize,
    pub axis: usize,
    pub center: f64,
    pub n: usize,
    pub mean_predicted: f64,
    pub mean_outcome: f64,
    /// Standard error of `mean_outcome - mean_predicted`.
    pub se: f64,
    pub z: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub bins: Vec<BinResult>,
    /// Bins skipped for having fewer than `n_min` shots: (check, axis, center, n).
    pub flagged: Vec<(usize, usize, f64, usize)>,
    pub all_within: bool,
    pub chi2: f64,
    pub dof: usize,
    #[serde(with = "crate::serde_float")]
    pub p_value: f64,
}

impl ValidationReport {
    pub fn worst_z(&self) -> f64 {
        self.bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max)
    }
}

/// Binned comparison of filtered predictions with tomography outcomes.
pub fn validate_filter(shots: &[ValidationShot], cfg: &ValidationConfig) -> Result<ValidationReport> {
    if shots.is_empty() {
        return Err(Error::EmptySample);
    }
    let n_bins = cfg.bin_centers.len();
    let mut bins = Vec::new();
    let mut flagged = Vec::new();
    for check in 0..cfg.check_steps.len() {
        for axis in 0..3 {
            let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_bins];
            for s in shots.iter().filter(|s| s.axis == axis) {
                let (p, o) = (s.predicted[check], s.outcome[check]);
                if let Some(b) = cfg.bin_of(p) {
                    groups[b].push((p, o));
                }
            }
            for (b, g) in groups.iter().enumerate() {
                let center = cfg.bin_centers[b];
                if g.len() < cfg.n_min {
                    if !g.is_empty() {
                        flagged.push((check, axis, center, g.len()));
                    }
                    continue;
                }
                let n = g.len() as f64;
                let mean_predicted = g.iter().map(|x| x.0).sum::<f64>() / n;
                let mean_outcome = g.iter().map(|x| x.1).sum::<f64>() / n;
                // outcome variance implied by the prediction itself
                let se = g.iter().map(|(p, _)| 1.0 - p * p).sum::<f64>().max(0.0).sqrt() / n;
                let z = if se > 0.0 { (mean_outcome - mean_predicted) / se } else { 0.0 };
                bins.push(BinResult {
                    check_index: check,
                    axis,
                    center,
                    n: g.len(),
                    mean_predicted,
                    mean_outcome,
                    se,
                    z,
                    within: z.abs() <= cfg.n_sigma,
                });
            }
        }
    }
    let chi2: f64 = bins.iter().map(|b| b.z * b.z).sum();
    let dof = bins.len();
    let p_value = if dof == 0 {
        f64::NAN
    } else {
        ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(chi2)).unwrap_or(f64::NAN)
    };
    Ok(ValidationReport { all_within: bins.iter().all(|b| b.within), bins, flagged, chi2, dof, p_value })
}
