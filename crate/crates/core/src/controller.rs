//! Pump-phase controllers: homodyne, heterodyne, adaptive feedback and replay.
//!
//! The adaptive controller integrates the proportional law `dφ = P(t) V dt`
//! and keeps `θ = φ - π/2` as its running phase estimate. The record reaches
//! the controller through a pure transport delay followed by a first-order
//! low-pass filter `y ← y + (dt/τ_f)(x - y)`; the gain is applied after the
//! filter, evaluated at the time the filtered sample was recorded.
//!
//! Causality: the sample recorded at step `k` first moves `φ` at step
//! `k + max(1, round(delay/dt))`.

use std::collections::VecDeque;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modeshape::{GainTable, ModeShape};
use crate::scalar::{wrap_half_pi, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Homodyne,
    Heterodyne,
    Adaptive,
    Replay,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Homodyne => "homodyne",
            Scheme::Heterodyne => "heterodyne",
            Scheme::Adaptive => "adaptive",
            Scheme::Replay => "replay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "homodyne" => Some(Scheme::Homodyne),
            "heterodyne" => Some(Scheme::Heterodyne),
            "adaptive" | "adaptivedyne" => Some(Scheme::Adaptive),
            "replay" => Some(Scheme::Replay),
            _ => None,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig<T> {
    pub scheme: Scheme,
    /// Initial (or constant, for homodyne) pump phase in radians.
    pub phi0: T,
    /// Heterodyne detuning in Hz.
    pub f_het: T,
    /// Feedback transport delay in seconds.
    pub delay: T,
    /// Exponential filter time constant in seconds; 0 disables the filter.
    pub filter_tau: T,
    /// Gain clamp floor in seconds; `None` means eight grid steps.
    pub t_min: Option<T>,
    /// Optional bound on the pump-frequency excursion `|dφ/dt|/2π` in Hz.
    pub slew_limit_hz: Option<T>,
}

impl<T: Real> ControllerConfig<T> {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            phi0: T::zero(),
            f_het: T::zero(),
            delay: T::zero(),
            filter_tau: T::zero(),
            t_min: None,
            slew_limit_hz: None,
        }
    }

    pub fn homodyne(phi0: T) -> Self {
        Self { phi0, ..Self::new(Scheme::Homodyne) }
    }

    pub fn heterodyne(f_het: T) -> Self {
        Self { f_het, ..Self::new(Scheme::Heterodyne) }
    }

    /// Ideal adaptive controller: no delay, no filter.
    pub fn adaptive() -> Self {
        Self::new(Scheme::Adaptive)
    }

    pub fn replay() -> Self {
        Self::new(Scheme::Replay)
    }

    pub fn with_delay(mut self, delay: T) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_filter(mut self, filter_tau: T) -> Self {
        self.filter_tau = filter_tau;
        self
    }

    pub fn with_phi0(mut self, phi0: T) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.delay >= T::zero()) || !self.delay.is_finite() {
            return bad("delay must be >= 0");
        }
        if !(self.filter_tau >= T::zero()) || !self.filter_tau.is_finite() {
            return bad("filter_tau must be >= 0");
        }
        if !(self.f_het >= T::zero()) || !self.f_het.is_finite() {
            return bad("f_het must be >= 0");
        }
        if !self.phi0.is_finite() {
            return bad("phi0 must be finite");
        }
        if let Some(s) = self.slew_limit_hz {
            if !(s > T::zero()) {
                return bad("slew limit must be positive");
            }
        }
        Ok(())
    }
}

/// A pump phase together with its phasor `e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase<T> {
    pub angle: T,
    pub phasor: Complex<T>,
}

impl<T: Real> Phase<T> {
    #[inline]
    pub fn new(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self { angle, phasor: Complex::new(c, s) }
    }
}

/// Interface the trajectory engine drives once per step.
pub trait Controller<T> {
    /// Pump phase to apply during step `k`.
    fn next_phase(&mut self, k: usize) -> Result<Phase<T>>;

    /// Consumes the record increment of step `k`.
    fn ingest_record(&mut self, v_dt: T, k: usize);

    /// Running record integral `R = Σ e^{iφ}√u V dt`.
    fn accumulator(&self) -> Complex<T>;
}

/// Grid tables shared read-only by every controller of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTables<T> {
    pub dt: T,
    pub n_steps: usize,
    pub gain: Vec<T>,
    pub sqrt_u: Vec<T>,
}

impl<T: Real> FeedbackTables<T> {
    pub fn new(mode: &ModeShape<T>, t_min: Option<T>) -> Self {
        let table = match t_min {
            Some(t) => GainTable::new(mode, t),
            None => GainTable::with_default_floor(mode),
        };
        Self {
            dt: mode.grid.dt(),
            n_steps: mode.grid.n_steps(),
            gain: table.gain,
            sqrt_u: mode.sqrt_u(),
        }
    }
}

/// A stored pump-phase sequence, one entry per step.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProgram<T> {
    pub dt: T,
    pub phi: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct PhaseController<T> {
    scheme: Scheme,
    phi0: T,
    omega_het: T,
    latency: usize,
    filter_alpha: Option<T>,
    max_step: Option<T>,
    tables: Arc<FeedbackTables<T>>,
    replay: Option<Arc<PhaseProgram<T>>>,

    phi: T,
    r: Complex<T>,
    delay_line: VecDeque<T>,
    filter_y: T,
    current: Phase<T>,
    steps: usize,
    capture: bool,
    phi_history: Vec<T>,
}

impl<T: Real> PhaseController<T> {
    pub fn new(
        config: &ControllerConfig<T>,
        tables: Arc<FeedbackTables<T>>,
        replay: Option<Arc<PhaseProgram<T>>>,
    ) -> Result<Self> {
        config.validate()?;
        let dt = tables.dt;
        if config.scheme == Scheme::Replay {
            match &replay {
                None => return Err(Error::MissingReplayProgram),
                Some(p) if p.phi.len() != tables.n_steps || (p.dt - dt).abs() > dt * T::lit(1e-9) => {
                    return Err(Error::GridMismatch(format!(
                        "replay program has {} steps of {} s, grid has {} of {} s",
                        p.phi.len(),
                        p.dt,
                        tables.n_steps,
                        dt
                    )))
                }
                _ => {}
            }
        }
        let delay_steps = (config.delay / dt).round().to_usize().unwrap_or(0);
        let latency = delay_steps.max(1);
        let filter_alpha =
            (config.filter_tau > T::zero()).then(|| (dt / config.filter_tau).min(T::one()));
        let max_step = config.slew_limit_hz.map(|f| T::TAU() * f * dt);
        Ok(Self {
            scheme: config.scheme,
            phi0: config.phi0,
            omega_het: T::TAU() * config.f_het,
            latency,
            filter_alpha,
            max_step,
            tables,
            replay,
            phi: config.phi0,
            r: Complex::new(T::zero(), T::zero()),
            delay_line: VecDeque::with_capacity(latency),
            filter_y: T::zero(),
            current: Phase::new(config.phi0),
            steps: 0,
            capture: false,
            phi_history: Vec::new(),
        })
    }

    /// Records every emitted phase so the run can be replayed.
    pub fn capture_history(mut self) -> Self {
        self.capture = true;
        self.phi_history.reserve_exact(self.tables.n_steps);
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Steps of loop latency applied to the record.
    pub fn latency_steps(&self) -> usize {
        self.latency
    }

    /// Pump phase that will be emitted next (unwrapped, adaptive scheme).
    pub fn phi(&self) -> T {
        self.phi
    }

    /// Running phase estimate `θ = φ - π/2` of the adaptive law.
    pub fn theta(&self) -> T {
        self.phi - T::FRAC_PI_2()
    }

    pub fn filter_state(&self) -> T {
        self.filter_y
    }

    pub fn steps_consumed(&self) -> usize {
        self.steps
    }

    pub fn phi_history(&self) -> &[T] {
        &self.phi_history
    }

    pub fn into_program(self) -> PhaseProgram<T> {
        PhaseProgram { dt: self.tables.dt, phi: self.phi_history }
    }
}

impl<T: Real> Controller<T> for PhaseController<T> {
    #[inline]
    fn next_phase(&mut self, k: usize) -> Result<Phase<T>> {
        if k >= self.tables.n_steps {
            return Err(Error::IndexOutOfGrid { index: k, len: self.tables.n_steps });
        }
        let angle = match self.scheme {
            Scheme::Homodyne => self.phi0,
            Scheme::Heterodyne => self.phi0 + self.omega_het * self.tables.dt * T::lit(k as f64),
            Scheme::Adaptive => self.phi,
            Scheme::Replay => match &self.replay {
                Some(p) => p.phi[k],
                None => return Err(Error::MissingReplayProgram),
            },
        };
        self.current = Phase::new(angle);
        if self.capture {
            self.phi_history.push(angle);
        }
        Ok(self.current)
    }

    #[inline]
    fn ingest_record(&mut self, v_dt: T, k: usize) {
        self.r += self.current.phasor * (self.tables.sqrt_u[k] * v_dt);
        self.steps += 1;
        if self.scheme != Scheme::Adaptive {
            return;
        }
        self.delay_line.push_back(v_dt);
        if self.delay_line.len() < self.latency {
            return;
        }
        let x = self.delay_line.pop_front().expect("delay line primed");
        let source = k + 1 - self.latency;
        self.filter_y = match self.filter_alpha {
            Some(alpha) => self.filter_y + alpha * (x - self.filter_y),
            None => x,
        };
        let mut dphi = self.tables.gain[source] * self.filter_y;
        if let Some(m) = self.max_step {
            dphi = dphi.max(-m).min(m);
        }
        self.phi += dphi;
    }

    fn accumulator(&self) -> Complex<T> {
        self.r
    }
}

/// Reference adaptive controller that recomputes `φ = arg R + π/2` from the
/// record integral every step (zero delay, no filter).
#[derive(Debug, Clone)]
pub struct ArgRController<T> {
    tables: Arc<FeedbackTables<T>>,
    phi: T,
    r: Complex<T>,
    current: Phase<T>,
}

impl<T: Real> ArgRController<T> {
    pub fn new(phi0: T, tables: Arc<FeedbackTables<T>>) -> Self {
        Self { tables, phi: phi0, r: Complex::new(T::zero(), T::zero()), current: Phase::new(phi0) }
    }

    pub fn theta(&self) -> T {
        self.phi - T::FRAC_PI_2()
    }
}

impl<T: Real> Controller<T> for ArgRController<T> {
    fn next_phase(&mut self, k: usize) -> Result<Phase<T>> {
        if k >= self.tables.n_steps {
            return Err(Error::IndexOutOfGrid { index: k, len: self.tables.n_steps });
        }
        self.current = Phase::new(self.phi);
        Ok(self.current)
    }

    fn ingest_record(&mut self, v_dt: T, k: usize) {
        self.r += self.current.phasor * (self.tables.sqrt_u[k] * v_dt);
        if self.r.norm_sqr() > T::zero() {
            // keep φ unwrapped by moving to the branch nearest the old value
            let target = self.r.arg() + T::FRAC_PI_2();
            self.phi += crate::scalar::wrap_pi(target - self.phi);
        }
    }

    fn accumulator(&self) -> Complex<T> {
        self.r
    }
}

/// Distance `φ_opt - φ` between the optimal quadrature `θ + π/2` and the
/// applied phase, folded into `[-π/2, π/2]`.
pub fn phase_condition_error<T: Real>(phi: T, oracle_theta: T) -> T {
    wrap_half_pi(oracle_theta + T::FRAC_PI_2() - phi)
}
