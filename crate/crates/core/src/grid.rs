use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform time grid `t_k = k * dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    dt: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    /// Grid covering `total` seconds with step `dt`; the step count is rounded
    /// so that `n_steps * dt` lands within one step of `total`.
    pub fn new(dt: T, total: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(total >= dt) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "total time {total} must be at least one step {dt}"
            )));
        }
        let n_steps = (total / dt).round().to_usize().unwrap_or(0).max(1);
        Ok(Self { dt, n_steps })
    }

    pub fn with_steps(dt: T, n_steps: usize) -> Result<Self> {
        if !(dt > T::zero()) || n_steps == 0 {
            return Err(Error::InvalidParameter("dt > 0 and n_steps >= 1 required".into()));
        }
        Ok(Self { dt, n_steps })
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn total(&self) -> T {
        self.dt * T::lit(self.n_steps as f64)
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        self.dt * T::lit(k as f64)
    }

    /// Index of the grid point closest to `t`, clamped to the grid.
    pub fn index_of(&self, t: T) -> usize {
        let k = (t / self.dt).round().to_isize().unwrap_or(0).max(0) as usize;
        k.min(self.n_steps)
    }

    /// Same spacing, fewer steps.
    pub fn truncated(&self, n_steps: usize) -> Self {
        Self { dt: self.dt, n_steps: n_steps.clamp(1, self.n_steps) }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n_steps == other.n_steps && (self.dt - other.dt).abs() <= self.dt * T::lit(1e-9)
    }
}
