//! Decay-rate schedules, emitted mode shapes and the proportional feedback gain.
//!
//! All sequences are sampled on the `n_steps + 1` points of a [`TimeGrid`],
//! endpoints included, and integrated with the trapezoid rule.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;

/// Unit in which user-facing rate values are quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateUnit {
    /// Plain rate in s⁻¹.
    #[default]
    PerSecond,
    /// Value is `ω/2π` in Hz; the rate is `2π` times larger.
    AngularOverTwoPi,
}

impl RateUnit {
    pub fn to_rate<T: Real>(self, value: T) -> T {
        match self {
            RateUnit::PerSecond => value,
            RateUnit::AngularOverTwoPi => value * T::TAU(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule<T> {
    pub grid: TimeGrid<T>,
    pub gamma: Vec<T>,
    pub gamma_max: T,
    /// Nominal photon duration for flat schedules; `None` for other shapes.
    pub tau: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShape<T> {
    pub grid: TimeGrid<T>,
    /// Emitted intensity `u(t) = γ(t)·|c₊(t)|²`.
    pub u: Vec<T>,
    /// Excited population `|c₊(t)|² = exp(-∫γ)`.
    pub survival: Vec<T>,
    /// Running integral `∫₀ᵗ u`.
    pub cumulative: Vec<T>,
    /// Population left in `|+⟩` at the end of the grid.
    pub residual: T,
}

impl<T: Real> GammaSchedule<T> {
    /// Rates sampled on the grid; every entry must lie in `[0, gamma_max]`.
    pub fn from_samples(grid: TimeGrid<T>, gamma: Vec<T>, gamma_max: T) -> Result<Self> {
        if gamma.len() != grid.n_steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} rate samples for a grid of {} points",
                gamma.len(),
                grid.n_steps() + 1
            )));
        }
        if !gamma_max.is_finite() || gamma_max < T::zero() {
            return Err(Error::InvalidParameter("gamma_max must be finite and >= 0".into()));
        }
        if let Some((i, g)) = gamma
            .iter()
            .enumerate()
            .find(|(_, g)| !g.is_finite() || **g < T::zero() || **g > gamma_max)
        {
            return Err(Error::InvalidParameter(format!(
                "gamma[{i}] = {g} outside [0, {gamma_max}]"
            )));
        }
        Ok(Self { grid, gamma, gamma_max, tau: None })
    }

    /// Constant decay rate; `rate = 0` switches the emitter off.
    pub fn constant(rate: T, grid: TimeGrid<T>) -> Result<Self> {
        Self::from_samples(grid, vec![rate; grid.n_steps() + 1], rate)
    }

    #[inline]
    pub fn at(&self, k: usize) -> T {
        self.gamma[k]
    }

    pub fn max_rate(&self) -> T {
        self.gamma.iter().copied().fold(T::zero(), T::max)
    }
}

/// Schedule `γ(t) = min(1/(τ-t), γ_max)` that emits a flat photon of length
/// `τ`, held at the cap from the crossover `τ - 1/γ_max` onwards.
pub fn flat_gamma<T: Real>(tau: T, gamma_max: T, grid: TimeGrid<T>) -> Result<GammaSchedule<T>> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if tau + T::lit(0.5) * grid.dt() >= grid.total() {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} s does not fit in the record of {} s",
            grid.total()
        )));
    }
    if !gamma_max.is_finite() || gamma_max * tau <= T::one() + T::lit(1e-12) {
        return Err(Error::InvalidParameter(format!(
            "gamma_max = {gamma_max} must be finite and exceed 1/tau = {}",
            T::one() / tau
        )));
    }
    let gamma = (0..=grid.n_steps())
        .map(|k| {
            let t = grid.time(k);
            if t < tau {
                (T::one() / (tau - t)).min(gamma_max)
            } else {
                gamma_max
            }
        })
        .collect();
    Ok(GammaSchedule { grid, gamma, gamma_max, tau: Some(tau) })
}

/// Crossover time at which the flat schedule reaches its cap.
pub fn cap_crossover<T: Real>(tau: T, gamma_max: T) -> T {
    tau - T::one() / gamma_max
}

pub fn mode_shape_from_gamma<T: Real>(sched: &GammaSchedule<T>) -> ModeShape<T> {
    let n = sched.gamma.len();
    let half_dt = T::lit(0.5) * sched.grid.dt();
    let mut survival = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    let mut decay_integral = T::zero();
    let mut emitted = T::zero();
    for k in 0..n {
        if k > 0 {
            decay_integral += half_dt * (sched.gamma[k - 1] + sched.gamma[k]);
        }
        let s = (-decay_integral).exp();
        let uk = sched.gamma[k] * s;
        if k > 0 {
            emitted += half_dt * (u[k - 1] + uk);
        }
        survival.push(s);
        u.push(uk);
        cumulative.push(emitted);
    }
    let residual = survival[n - 1];
    ModeShape { grid: sched.grid, u, survival, cumulative, residual }
}

impl<T: Real> ModeShape<T> {
    /// `∫₀ᵀ u dt` on the grid.
    pub fn emitted(&self) -> T {
        *self.cumulative.last().expect("non-empty mode")
    }

    pub fn sup(&self) -> T {
        self.u.iter().copied().fold(T::zero(), T::max)
    }

    pub fn sqrt_u(&self) -> Vec<T> {
        self.u.iter().map(|u| u.sqrt()).collect()
    }

    /// Two-column CSV `time_s,u_per_s`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_s,u_per_s")?;
        for (k, u) in self.u.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.time(k).as_f64(), u.as_f64())?;
        }
        Ok(())
    }
}

/// `P(t) = √(u(t) / ∫₀ᵗ u)`, clamped to `P(t_min)` below `t_min` and zero
/// wherever the mode carries no intensity.
pub fn feedback_gain<T: Real>(mode: &ModeShape<T>, t_index: usize, t_min: T) -> T {
    let k_min = mode.grid.index_of(t_min.max(T::zero())).max(1).min(mode.u.len() - 1);
    let k = t_index.max(k_min);
    let u = mode.u[k];
    let c = mode.cumulative[k];
    if u > T::zero() && c > T::zero() {
        (u / c).sqrt()
    } else {
        T::zero()
    }
}

/// Precomputed [`feedback_gain`] over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable<T> {
    pub t_min: T,
    pub gain: Vec<T>,
}

impl<T: Real> GainTable<T> {
    pub fn new(mode: &ModeShape<T>, t_min: T) -> Self {
        let gain = (0..mode.u.len()).map(|k| feedback_gain(mode, k, t_min)).collect();
        Self { t_min, gain }
    }

    /// Default clamp floor of eight grid steps.
    pub fn with_default_floor(mode: &ModeShape<T>) -> Self {
        Self::new(mode, T::lit(8.0) * mode.grid.dt())
    }

    #[inline]
    pub fn at(&self, k: usize) -> T {
        self.gain[k.min(self.gain.len() - 1)]
    }
}
