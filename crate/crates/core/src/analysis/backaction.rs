//! Measurement back-action on the conditioned Bloch vector.
//!
//! Phase back-action is the per-step change of the dipole azimuth
//! `arg(x + iy)`; amplitude back-action is the per-step change of `z`.
//! Steps where the coherence `|ρ₋₊| = √(x²+y²)/2` is below a floor are
//! skipped because the azimuth is ill-defined near the poles.

use serde::{Deserialize, Serialize};

use crate::analysis::estimator::mean_var;
use crate::error::{Error, Result};
use crate::scalar::wrap_pi;
use crate::state::BlochVector;
use crate::trajectory::{Observer, StepView};

pub const DEFAULT_COHERENCE_FLOOR: f64 = 0.05;

/// Half-open step range `[start, end)` of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    /// Window of `width` steps centred on step `center`.
    pub fn centered(center: usize, width: usize) -> Self {
        let half = width / 2;
        Self { start: center.saturating_sub(half), end: center.saturating_sub(half) + width.max(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotBackaction {
    /// Mean `dθ²` per window; `None` if no step cleared the floor.
    pub ms_dtheta: Vec<Option<f64>>,
    pub ms_dz: Vec<f64>,
}

/// Accumulates per-window squared increments along one trajectory.
#[derive(Debug, Clone)]
pub struct BackactionObserver {
    windows: Vec<Window>,
    floor: f64,
    sum_dtheta: Vec<f64>,
    n_dtheta: Vec<usize>,
    sum_dz: Vec<f64>,
    n_dz: Vec<usize>,
}

impl BackactionObserver {
    pub fn new(windows: Vec<Window>, coherence_floor: f64) -> Self {
        let n = windows.len();
        Self {
            windows,
            floor: coherence_floor,
            sum_dtheta: vec![0.0; n],
            n_dtheta: vec![0; n],
            sum_dz: vec![0.0; n],
            n_dz: vec![0; n],
        }
    }

    pub fn finish(self) -> ShotBackaction {
        let ms_dtheta = self
            .sum_dtheta
            .iter()
            .zip(&self.n_dtheta)
            .map(|(s, n)| (*n > 0).then(|| s / *n as f64))
            .collect();
        let ms_dz = self.sum_dz.iter().zip(&self.n_dz).map(|(s, n)| s / (*n).max(1) as f64).collect();
        ShotBackaction { ms_dtheta, ms_dz }
    }
}

impl Observer<f64> for BackactionObserver {
    fn observe(&mut self, s: &StepView<'_, f64>) {
        let mut before: Option<BlochVector<f64>> = None;
        for (i, w) in self.windows.iter().enumerate() {
            if s.k < w.start || s.k >= w.end {
                continue;
            }
            let b0 = *before.get_or_insert_with(|| s.rho_before.bloch());
            let b1 = s.rho_after.bloch();
            self.sum_dz[i] += (b1.z - b0.z).powi(2);
            self.n_dz[i] += 1;
            if 0.5 * b0.transverse() >= self.floor && 0.5 * b1.transverse() >= self.floor {
                self.sum_dtheta[i] += wrap_pi(b1.dipole_phase() - b0.dipole_phase()).powi(2);
                self.n_dtheta[i] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: Window,
    /// RMS per-step `dθ` over shots with defined phase.
    #[serde(with = "crate::serde_float")]
    pub rms_dtheta: f64,
    #[serde(with = "crate::serde_float")]
    pub rms_dtheta_se: f64,
    pub n_shots_dtheta: usize,
    #[serde(with = "crate::serde_float")]
    pub rms_dz: f64,
    #[serde(with = "crate::serde_float")]
    pub rms_dz_se: f64,
}

/// Running first and second moments of per-shot mean squares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentSums {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentSums {
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    /// RMS `√⟨ms⟩` and its standard error.
    pub fn rms_with_error(&self) -> (f64, f64) {
        if self.n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        let rms = mean.max(0.0).sqrt();
        let se = if rms > 0.0 { (var / n).sqrt() / (2.0 * rms) } else { 0.0 };
        (rms, se)
    }
}

/// Mergeable per-window reduction of [`ShotBackaction`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackactionAccumulator {
    pub dtheta: Vec<MomentSums>,
    pub dz: Vec<MomentSums>,
}

impl BackactionAccumulator {
    pub fn new(n_windows: usize) -> Self {
        Self { dtheta: vec![MomentSums::default(); n_windows], dz: vec![MomentSums::default(); n_windows] }
    }

    pub fn add(&mut self, shot: &ShotBackaction) {
        for (acc, ms) in self.dtheta.iter_mut().zip(&shot.ms_dtheta) {
            if let Some(ms) = ms {
                acc.add(*ms);
            }
        }
        for (acc, ms) in self.dz.iter_mut().zip(&shot.ms_dz) {
            acc.add(*ms);
        }
    }

    pub fn merge(&mut self, o: &Self) {
        for (a, b) in self.dtheta.iter_mut().zip(&o.dtheta) {
            a.merge(b);
        }
        for (a, b) in self.dz.iter_mut().zip(&o.dz) {
            a.merge(b);
        }
    }

    pub fn stats(&self, windows: &[Window]) -> Vec<WindowStats> {
        windows
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let (rms_dtheta, rms_dtheta_se) = self.dtheta[i].rms_with_error();
                let (rms_dz, rms_dz_se) = self.dz[i].rms_with_error();
                WindowStats {
                    window: *w,
                    rms_dtheta,
                    rms_dtheta_se,
                    n_shots_dtheta: self.dtheta[i].n,
                    rms_dz,
                    rms_dz_se,
                }
            })
            .collect()
    }
}

/// Ensemble RMS back-action per window, with standard errors from the
/// shot-to-shot spread.
pub fn backaction_stats(windows: &[Window], shots: &[ShotBackaction]) -> Result<Vec<WindowStats>> {
    if shots.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut acc = BackactionAccumulator::new(windows.len());
    for s in shots {
        acc.add(s);
    }
    Ok(acc.stats(windows))
}

/// Captures the conditioned Bloch vector at the start of selected steps.
#[derive(Debug, Clone)]
pub struct SnapshotObserver {
    steps: Vec<usize>,
    pub snapshots: Vec<Option<BlochVector<f64>>>,
}

impl SnapshotObserver {
    pub fn new(steps: Vec<usize>) -> Self {
        let n = steps.len();
        Self { steps, snapshots: vec![None; n] }
    }
}

impl Observer<f64> for SnapshotObserver {
    fn observe(&mut self, s: &StepView<'_, f64>) {
        for (i, k) in self.steps.iter().enumerate() {
            if *k == s.k {
                self.snapshots[i] = Some(s.rho_before.bloch());
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub n: usize,
    pub radial_mean: f64,
    pub radial_std: f64,
    pub transverse_mean: f64,
    pub transverse_std: f64,
    pub transverse_std_se: f64,
    pub z_mean: f64,
    pub z_std: f64,
}

/// Spread of an ensemble of Bloch vectors taken at a common time.
pub fn ring_stats(vectors: &[BlochVector<f64>]) -> Result<RingStats> {
    if vectors.is_empty() {
        return Err(Error::EmptySample);
    }
    let sd = |xs: &mut dyn Iterator<Item = f64>| {
        let (m, v) = mean_var(xs);
        (m, if v.is_nan() { 0.0 } else { v.sqrt() })
    };
    let (radial_mean, radial_std) = sd(&mut vectors.iter().map(|b| b.norm()));
    let transverse: Vec<f64> = vectors.iter().map(|b| b.transverse()).collect();
    let (transverse_mean, transverse_std) = sd(&mut transverse.iter().copied());
    let (z_mean, z_std) = sd(&mut vectors.iter().map(|b| b.z));
    let var_se = crate::analysis::estimator::variance_standard_error(&transverse);
    let transverse_std_se = if transverse_std > 0.0 { var_se / (2.0 * transverse_std) } else { 0.0 };
    Ok(RingStats {
        n: vectors.len(),
        radial_mean,
        radial_std,
        transverse_mean,
        transverse_std,
        transverse_std_se,
        z_mean,
        z_std,
    })
}
