//! Conditioned-state updates for the decaying emitter under diffusive
//! measurement of its fluorescence at pump phase `φ`.
//!
//! Measurement record, Ito convention with the pre-update state:
//!
//! ```text
//! V dt = √(γη) ⟨σ e^{-iφ} + σ† e^{iφ}⟩ dt + dW
//! ```
//!
//! Master equation for the conditioned state:
//!
//! ```text
//! dρ = (Γ₂/2) D[σ_z]ρ dt + γ D[σ]ρ dt + √(γη) H[σ e^{-iφ}]ρ dW
//! ```
//!
//! Pump phases are passed as unit phasors `e^{iφ}` so the trigonometry is
//! evaluated once per step by the caller.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::modeshape::GammaSchedule;
use crate::scalar::Real;
use crate::state::{DensityMatrix, PureAmplitudes};

/// Tolerated negative eigenvalue before the Euler scheme reports a violation.
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Integrator {
    /// Explicit Euler–Maruyama on the master equation.
    Euler,
    /// One-step Kraus map, positive by construction.
    #[default]
    Kraus,
}

/// Physical parameters of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams<T> {
    /// Detection efficiency in `(0, 1]`.
    pub eta: T,
    /// Dephasing rate `Γ₂` in s⁻¹.
    pub gamma_t2: T,
    pub sched: GammaSchedule<T>,
    pub integrator: Integrator,
}

impl<T: Real> SimParams<T> {
    pub fn new(eta: T, gamma_t2: T, sched: GammaSchedule<T>) -> Result<Self> {
        if !(eta > T::zero() && eta <= T::one()) {
            return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
        }
        if !(gamma_t2 >= T::zero()) || !gamma_t2.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma_t2 = {gamma_t2} must be >= 0")));
        }
        Ok(Self { eta, gamma_t2, sched, integrator: Integrator::Kraus })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.sched.grid
    }
}

/// Signal rate `√(γη)⟨σe^{-iφ} + σ†e^{iφ}⟩`, equal to `√(γη)(x cos φ + y sin φ)`.
#[inline(always)]
pub fn signal_rate<T: Real>(rho: &DensityMatrix<T>, sqrt_gamma_eta: T, phasor: Complex<T>) -> T {
    let two = T::one() + T::one();
    two * sqrt_gamma_eta * (rho.rho_mp.re * phasor.re - rho.rho_mp.im * phasor.im)
}

/// Kraus-form update given the observed increment `v_dt`:
/// `ρ' ∝ MρM† + (1-η)γ σρσ† dt + (Γ₂/2) σ_z ρ σ_z dt`, with
/// `M = I - (½γσ†σ + ¼Γ₂)dt + √(γη) e^{-iφ} σ v_dt`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
pub fn kraus_update<T: Real>(
    rho: &DensityMatrix<T>,
    gamma: T,
    eta: T,
    gamma_t2: T,
    phasor: Complex<T>,
    v_dt: T,
    dt: T,
) -> DensityMatrix<T> {
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let (p, q, c) = (rho.rho_mm, rho.rho_pp, rho.rho_mp);
    let m00 = T::one() - quarter * gamma_t2 * dt;
    let m11 = m00 - half * gamma * dt;
    let m01 = phasor.conj() * ((gamma * eta).sqrt() * v_dt);
    let deph = half * gamma_t2 * dt;
    let lost = (T::one() - eta) * gamma * dt;

    // Re(m01 · conj(c))
    let cross = m01.re * c.re + m01.im * c.im;
    let new_mm = m00 * m00 * p + (m00 + m00) * cross + m01.norm_sqr() * q + lost * q + deph * p;
    let new_pp = m11 * m11 * q + deph * q;
    let new_mp = (c * m00 + m01 * q) * m11 - c * deph;
    let inv = T::one() / (new_mm + new_pp);
    DensityMatrix { rho_mm: new_mm * inv, rho_pp: new_pp * inv, rho_mp: new_mp * inv }
}

/// Euler–Maruyama increment of the master equation, driven by the innovation
/// `dW = v_dt - signal·dt`. The result is renormalized but not projected
/// back onto positive matrices.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn euler_update<T: Real>(
    rho: &DensityMatrix<T>,
    gamma: T,
    eta: T,
    gamma_t2: T,
    phasor: Complex<T>,
    v_dt: T,
    dt: T,
) -> DensityMatrix<T> {
    let half = T::lit(0.5);
    let (p, q, c) = (rho.rho_mm, rho.rho_pp, rho.rho_mp);
    let sge = (gamma * eta).sqrt();
    let a = phasor.conj();
    // s = tr[(c + c†)ρ] for c = e^{-iφ}σ
    let s = T::lit(2.0) * (phasor.re * c.re - phasor.im * c.im);
    let dw = v_dt - sge * s * dt;

    let dp = gamma * q * dt + sge * (s - s * p) * dw;
    let dq = -gamma * q * dt - sge * s * q * dw;
    let dc = c * (-(gamma_t2 + half * gamma) * dt) + (a * q - c * s) * (sge * dw);
    DensityMatrix { rho_mm: p + dp, rho_pp: q + dq, rho_mp: c + dc }.normalized()
}

/// Filter update from an observed record increment with the chosen integrator.
#[inline(always)]
pub fn update_from_record<T: Real>(
    integrator: Integrator,
    rho: &DensityMatrix<T>,
    gamma: T,
    params: &SimParams<T>,
    phasor: Complex<T>,
    v_dt: T,
    dt: T,
) -> DensityMatrix<T> {
    match integrator {
        Integrator::Kraus => kraus_update(rho, gamma, params.eta, params.gamma_t2, phasor, v_dt, dt),
        Integrator::Euler => euler_update(rho, gamma, params.eta, params.gamma_t2, phasor, v_dt, dt),
    }
}

/// One step of the conditioned dynamics: emits `V dt` from the pre-update
/// state and returns the updated, normalized state.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn step_sme<T: Real>(
    rho: &DensityMatrix<T>,
    gamma: T,
    phasor: Complex<T>,
    params: &SimParams<T>,
    dw: T,
    dt: T,
    step: usize,
) -> Result<(DensityMatrix<T>, T)> {
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise { step });
    }
    let v_dt = signal_rate(rho, (gamma * params.eta).sqrt(), phasor) * dt + dw;
    let next = update_from_record(params.integrator, rho, gamma, params, phasor, v_dt, dt);
    if params.integrator == Integrator::Euler {
        let min_eig = next.min_eigenvalue();
        if min_eig < -T::lit(POSITIVITY_TOLERANCE) {
            return Err(Error::PositivityViolation { step, min_eigenvalue: min_eig.as_f64() });
        }
    }
    Ok((next, v_dt))
}

/// Linear (unnormalized) stochastic Schrödinger update for unit efficiency:
/// `c₊' = c₊(1 - ½γdt)`, `c₋' = c₋ + c₊ √γ e^{-iφ} V dt`.
#[inline]
pub fn step_sse<T: Real>(
    psi: &PureAmplitudes<T>,
    gamma: T,
    phasor: Complex<T>,
    v_dt: T,
    dt: T,
) -> PureAmplitudes<T> {
    let c_plus = psi.c_plus * (T::one() - T::lit(0.5) * gamma * dt);
    let c_minus = psi.c_minus + psi.c_plus * phasor.conj() * (gamma.sqrt() * v_dt);
    PureAmplitudes { c_minus, c_plus }
}
