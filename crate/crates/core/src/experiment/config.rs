//! Flat `key = value` run configuration.
//!
//! One file fully determines a run. Blank lines and `#` comments are
//! ignored. Units are SI throughout:
//!
//! | key              | meaning                                   | default            |
//! |------------------|-------------------------------------------|--------------------|
//! | `eta`            | detection efficiency                      | 0.4                |
//! | `gamma_t2`       | dephasing rate Γ₂ (s⁻¹)                   | 6e4                |
//! | `delay_s`        | feedback loop delay                       | 374e-9             |
//! | `filter_s`       | loop filter time constant (0 = off)       | 128e-9             |
//! | `f_het`          | heterodyne frequency (Hz)                 | 5e5                |
//! | `tau_s`          | flat photon duration                      | 10e-6              |
//! | `t_total_s`      | record length                             | 13e-6              |
//! | `dt_s`           | grid step                                 | 1e-9               |
//! | `coarse`         | force `dt_s = 4e-9`                       | false              |
//! | `gamma_max`      | decay-rate cap                            | 1.4e6              |
//! | `gamma_max_unit` | `rate` or `angular` (value is ω/2π)       | rate               |
//! | `gamma_const`    | constant rate instead of the flat shape   | unset              |
//! | `traj`           | trajectories per Θ and scheme             | 1000               |
//! | `n_theta`        | equally spaced Θ values on the equator    | 8                  |
//! | `thetas`         | explicit comma-separated Θ list (rad)     | unset              |
//! | `seed`           | master seed                               | 1                  |
//! | `schemes`        | comma list of schemes                     | adaptive,replay,heterodyne |
//! | `integrator`     | `kraus` or `euler`                        | kraus              |
//! | `phi0`           | initial pump phase (rad)                  | 0                  |
//! | `t_min_s`        | gain clamp floor (unset = 8·dt)           | unset              |
//! | `slew_limit_hz`  | pump-frequency excursion clamp            | unset              |
//! | `workers`        | worker threads (unset = all cores)        | unset              |
//! | `bootstrap`      | Holevo bootstrap resamples                | 1000               |
//! | `out_dir`        | output directory                          | `out`              |
//! | `diagnostics`    | collect figure diagnostics                | true               |
//! | `ring_time_s`    | snapshot time for ring statistics         | 10e-6              |
//! | `ba_window_s`    | back-action window width                  | 200e-9             |
//! | `phase_stride_s` | sampling stride of the phase error        | 100e-9             |
//! | `dump_traj`      | shots per scheme written as full dumps    | 0                  |
//! | `diag_traj`      | excited-state diagnostic shots per scheme | `traj`             |

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerConfig, Scheme};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::modeshape::{flat_gamma, GammaSchedule, RateUnit};
use crate::sme::{Integrator, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub eta: f64,
    pub gamma_t2: f64,
    pub delay_s: f64,
    pub filter_s: f64,
    pub f_het: f64,
    pub tau_s: f64,
    pub t_total_s: f64,
    pub dt_s: f64,
    pub coarse: bool,
    pub gamma_max: f64,
    pub gamma_max_unit: RateUnit,
    pub gamma_const: Option<f64>,
    pub traj: usize,
    pub thetas: Vec<f64>,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub integrator: Integrator,
    pub phi0: f64,
    pub t_min_s: Option<f64>,
    pub slew_limit_hz: Option<f64>,
    pub workers: Option<usize>,
    pub bootstrap: usize,
    pub out_dir: PathBuf,
    pub diagnostics: bool,
    pub ring_time_s: f64,
    pub ba_window_s: f64,
    pub phase_stride_s: f64,
    /// Shots per scheme (Θ index 0) re-simulated into full trajectory dumps.
    pub dump_traj: usize,
    /// Excited-state diagnostic shots per scheme; unset means `traj`.
    pub diag_traj: Option<usize>,
}

pub fn equally_spaced_thetas(n: usize) -> Vec<f64> {
    (0..n).map(|i| crate::scalar::wrap_pi(TAU * i as f64 / n as f64)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eta: 0.4,
            gamma_t2: 6e4,
            delay_s: 374e-9,
            filter_s: 128e-9,
            f_het: 5e5,
            tau_s: 10e-6,
            t_total_s: 13e-6,
            dt_s: 1e-9,
            coarse: false,
            gamma_max: 1.4e6,
            gamma_max_unit: RateUnit::PerSecond,
            gamma_const: None,
            traj: 1000,
            thetas: equally_spaced_thetas(8),
            seed: 1,
            schemes: vec![Scheme::Adaptive, Scheme::Replay, Scheme::Heterodyne],
            integrator: Integrator::Kraus,
            phi0: 0.0,
            t_min_s: None,
            slew_limit_hz: None,
            workers: None,
            bootstrap: 1000,
            out_dir: PathBuf::from("out"),
            diagnostics: true,
            ring_time_s: 10e-6,
            ba_window_s: 200e-9,
            phase_stride_s: 100e-9,
            dump_traj: 0,
            diag_traj: None,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: must be finite")));
    }
    Ok(x)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_int<I: std::str::FromStr>(key: &str, v: &str) -> Result<I> {
    v.parse().map_err(|_| Error::Config(format!("{key}: not a non-negative integer: {v:?}")))
}

fn parse_unset<X>(v: &str, f: impl FnOnce(&str) -> Result<X>) -> Result<Option<X>> {
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl ExperimentConfig {
    /// Parses `key = value` text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "eta" => self.eta = parse_f64(key, v)?,
            "gamma_t2" => self.gamma_t2 = parse_f64(key, v)?,
            "delay_s" => self.delay_s = parse_f64(key, v)?,
            "filter_s" => self.filter_s = parse_f64(key, v)?,
            "f_het" => self.f_het = parse_f64(key, v)?,
            "tau_s" => self.tau_s = parse_f64(key, v)?,
            "t_total_s" => self.t_total_s = parse_f64(key, v)?,
            "dt_s" => self.dt_s = parse_f64(key, v)?,
            "coarse" => self.coarse = parse_bool(key, v)?,
            "gamma_max" => self.gamma_max = parse_f64(key, v)?,
            "gamma_max_unit" => {
                self.gamma_max_unit = match v {
                    "rate" => RateUnit::PerSecond,
                    "angular" => RateUnit::AngularOverTwoPi,
                    _ => return Err(Error::Config(format!("{key}: expected rate or angular, got {v:?}"))),
                }
            }
            "gamma_const" => self.gamma_const = parse_unset(v, |v| parse_f64(key, v))?,
            "traj" => self.traj = parse_int(key, v)?,
            "n_theta" => self.thetas = equally_spaced_thetas(parse_int(key, v)?),
            "thetas" => {
                self.thetas = v
                    .split(',')
                    .map(|s| parse_f64(key, s.trim()))
                    .collect::<Result<Vec<_>>>()?
            }
            "seed" => self.seed = parse_int(key, v)?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .map(|s| Scheme::parse(s).ok_or_else(|| Error::Config(format!("{key}: unknown scheme {s:?}"))))
                    .collect::<Result<Vec<_>>>()?
            }
            "integrator" => {
                self.integrator = match v {
                    "kraus" => Integrator::Kraus,
                    "euler" => Integrator::Euler,
                    _ => return Err(Error::Config(format!("{key}: expected kraus or euler, got {v:?}"))),
                }
            }
            "phi0" => self.phi0 = parse_f64(key, v)?,
            "t_min_s" => self.t_min_s = parse_unset(v, |v| parse_f64(key, v))?,
            "slew_limit_hz" => self.slew_limit_hz = parse_unset(v, |v| parse_f64(key, v))?,
            "workers" => self.workers = parse_unset(v, |v| parse_int(key, v))?,
            "bootstrap" => self.bootstrap = parse_int(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "diagnostics" => self.diagnostics = parse_bool(key, v)?,
            "ring_time_s" => self.ring_time_s = parse_f64(key, v)?,
            "ba_window_s" => self.ba_window_s = parse_f64(key, v)?,
            "phase_stride_s" => self.phase_stride_s = parse_f64(key, v)?,
            "dump_traj" => self.dump_traj = parse_int(key, v)?,
            "diag_traj" => self.diag_traj = parse_unset(v, |v| parse_int(key, v))?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Serializes back to the `key = value` format.
    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
        let mut m = BTreeMap::new();
        m.insert("eta", self.eta.to_string());
        m.insert("gamma_t2", self.gamma_t2.to_string());
        m.insert("delay_s", self.delay_s.to_string());
        m.insert("filter_s", self.filter_s.to_string());
        m.insert("f_het", self.f_het.to_string());
        m.insert("tau_s", self.tau_s.to_string());
        m.insert("t_total_s", self.t_total_s.to_string());
        m.insert("dt_s", self.dt_s.to_string());
        m.insert("coarse", self.coarse.to_string());
        m.insert("gamma_max", self.gamma_max.to_string());
        m.insert(
            "gamma_max_unit",
            match self.gamma_max_unit {
                RateUnit::PerSecond => "rate",
                RateUnit::AngularOverTwoPi => "angular",
            }
            .to_string(),
        );
        m.insert("gamma_const", opt(self.gamma_const));
        m.insert("traj", self.traj.to_string());
        m.insert("thetas", self.thetas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        m.insert("seed", self.seed.to_string());
        m.insert("schemes", self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(","));
        m.insert(
            "integrator",
            match self.integrator {
                Integrator::Kraus => "kraus",
                Integrator::Euler => "euler",
            }
            .to_string(),
        );
        m.insert("phi0", self.phi0.to_string());
        m.insert("t_min_s", opt(self.t_min_s));
        m.insert("slew_limit_hz", opt(self.slew_limit_hz));
        m.insert("workers", self.workers.map_or("none".to_string(), |w| w.to_string()));
        m.insert("bootstrap", self.bootstrap.to_string());
        m.insert("out_dir", self.out_dir.display().to_string());
        m.insert("diagnostics", self.diagnostics.to_string());
        m.insert("ring_time_s", self.ring_time_s.to_string());
        m.insert("ba_window_s", self.ba_window_s.to_string());
        m.insert("phase_stride_s", self.phase_stride_s.to_string());
        m.insert("dump_traj", self.dump_traj.to_string());
        m.insert("diag_traj", self.diag_traj.map_or("none".to_string(), |n| n.to_string()));
        m.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn effective_dt(&self) -> f64 {
        if self.coarse {
            4e-9
        } else {
            self.dt_s
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta = {} must lie in (0, 1]", self.eta));
        }
        if self.gamma_t2 < 0.0 {
            return bad("gamma_t2 must be >= 0".into());
        }
        if self.traj == 0 || self.diag_traj == Some(0) {
            return bad("traj and diag_traj must be >= 1".into());
        }
        if self.thetas.is_empty() {
            return bad("at least one theta is required".into());
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        if self.schemes.contains(&Scheme::Replay) && !self.schemes.contains(&Scheme::Adaptive) {
            return bad("replay needs adaptive in the scheme list".into());
        }
        if !(self.effective_dt() > 0.0) || !(self.t_total_s > self.effective_dt()) {
            return bad("need 0 < dt_s < t_total_s".into());
        }
        if self.delay_s < 0.0 || self.filter_s < 0.0 {
            return bad("delay_s and filter_s must be >= 0".into());
        }
        if !(self.ba_window_s > 0.0 && self.phase_stride_s > 0.0) {
            return bad("ba_window_s and phase_stride_s must be positive".into());
        }
        if self.ring_time_s < 0.0 || self.ring_time_s > self.t_total_s * (1.0 + 1e-9) {
            return bad("ring_time_s must lie inside the record".into());
        }
        self.controller(Scheme::Adaptive).validate().map_err(|e| Error::Config(e.to_string()))?;
        self.schedule()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid<f64>> {
        TimeGrid::new(self.effective_dt(), self.t_total_s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn schedule(&self) -> Result<GammaSchedule<f64>> {
        let grid = self.grid()?;
        let r = match self.gamma_const {
            Some(rate) => GammaSchedule::constant(rate, grid),
            None => flat_gamma(self.tau_s, self.gamma_max_unit.to_rate(self.gamma_max), grid),
        };
        r.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sim_params(&self) -> Result<SimParams<f64>> {
        SimParams::new(self.eta, self.gamma_t2, self.schedule()?)
            .map(|p| p.with_integrator(self.integrator))
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn controller(&self, scheme: Scheme) -> ControllerConfig<f64> {
        let mut c = ControllerConfig::new(scheme).with_phi0(self.phi0);
        c.f_het = self.f_het;
        c.delay = self.delay_s;
        c.filter_tau = self.filter_s;
        c.t_min = self.t_min_s;
        c.slew_limit_hz = self.slew_limit_hz;
        c
    }

    /// Ideal detection: unit efficiency, no dephasing, no delay, no filter.
    pub fn ideal() -> Self {
        Self { eta: 1.0, gamma_t2: 0.0, delay_s: 0.0, filter_s: 0.0, ..Self::default() }
    }
}
