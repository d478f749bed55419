//! Ensemble execution: per (Θ, trajectory) the scheme cycle adaptive →
//! replay → heterodyne (and optionally homodyne), each on its own noise
//! stream, reduced in fixed-size chunks so the output does not depend on
//! the worker count.
//!
//! Figure diagnostics (phase-condition error, back-action, ring) come from
//! a separate pass of `diag_traj` shot cycles that start in the excited
//! state. Their conditioned dipole phase is then set by the record alone
//! (`arg R` exactly when there is no dephasing), which is what the
//! controller tracks; an equatorial start keeps the dipole anchored to the
//! true Θ the controller does not know.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::backaction::{
    BackactionAccumulator, BackactionObserver, SnapshotObserver, Window, DEFAULT_COHERENCE_FLOOR,
};
use crate::analysis::estimator::{EnsembleResult, PhaseEstimate};
use crate::controller::{phase_condition_error, Controller, FeedbackTables, PhaseController, PhaseProgram, Scheme};
use crate::ensemble::par_map_indexed;
use crate::error::Result;
use crate::experiment::config::ExperimentConfig;
use crate::modeshape::{mode_shape_from_gamma, ModeShape};
use crate::noise::{derive_seed, GaussianNoise, StreamTag};
use crate::sme::SimParams;
use crate::state::{BlochVector, DensityMatrix};
use crate::trajectory::{record_with_noise, run_steps, Observer, StepView, TrajectoryRecord};

/// Trajectory pairs handled per task; fixed so reductions are reproducible.
pub const CHUNK: usize = 64;

/// Resolution of the phase-condition error histograms on `[0, π/2]`.
pub const PHASE_ERROR_BINS: usize = 1024;

pub fn stream_tag(scheme: Scheme) -> StreamTag {
    match scheme {
        Scheme::Adaptive => StreamTag::Adaptive,
        Scheme::Replay => StreamTag::Replay,
        Scheme::Heterodyne => StreamTag::Heterodyne,
        Scheme::Homodyne => StreamTag::Homodyne,
    }
}

/// Where figure diagnostics are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticPlan {
    pub dt: f64,
    pub phase_steps: Vec<usize>,
    pub windows: Vec<Window>,
    pub ring_step: usize,
}

impl DiagnosticPlan {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = cfg.grid()?;
        let n = grid.n_steps();
        let stride = ((cfg.phase_stride_s / grid.dt()).round() as usize).max(1);
        let width = ((cfg.ba_window_s / grid.dt()).round() as usize).max(2);
        let us = (1e-6 / grid.dt()).round() as usize;
        let windows = (1..)
            .map(|m| m * us)
            .take_while(|c| c + width / 2 <= n)
            .map(|c| Window::centered(c, width))
            .collect();
        Ok(Self {
            dt: grid.dt(),
            phase_steps: (0..n).step_by(stride).collect(),
            windows,
            ring_step: grid.index_of(cfg.ring_time_s).min(n - 1),
        })
    }

    pub fn window_center_time(&self, w: &Window) -> f64 {
        0.5 * (w.start + w.end) as f64 * self.dt
    }
}

/// Per-shot result row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub scheme: Scheme,
    pub theta_index: usize,
    pub traj_index: usize,
    pub theta_true: f64,
    pub seed: u64,
    pub r: (f64, f64),
}

impl ShotRecord {
    pub fn estimate(&self) -> PhaseEstimate {
        PhaseEstimate::from_r(Complex::new(self.r.0, self.r.1), self.theta_true, self.scheme)
    }

    pub const CSV_HEADER: &'static str =
        "scheme,theta_index,traj_index,theta_true,seed,r_re,r_im,r_mag,theta_hat,error,null";

    pub fn csv_row(&self) -> String {
        let e = self.estimate();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.theta_index,
            self.traj_index,
            self.theta_true,
            self.seed,
            self.r.0,
            self.r.1,
            e.r_mag,
            e.theta_hat,
            e.error(),
            u8::from(e.null),
        )
    }
}

/// Mergeable per-scheme diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeAggregate {
    /// One histogram of `|φ_opt - φ|` per sampled step.
    pub phase_error: Vec<Vec<u64>>,
    pub backaction: BackactionAccumulator,
    /// Conditioned Bloch vector at the ring time, one per diagnostic shot
    /// in trajectory order.
    pub ring: Vec<BlochVector<f64>>,
}

impl SchemeAggregate {
    pub fn new(plan: &DiagnosticPlan) -> Self {
        Self {
            phase_error: vec![vec![0; PHASE_ERROR_BINS]; plan.phase_steps.len()],
            backaction: BackactionAccumulator::new(plan.windows.len()),
            ring: Vec::new(),
        }
    }

    pub fn merge(&mut self, o: &Self) {
        for (a, b) in self.phase_error.iter_mut().zip(&o.phase_error) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.backaction.merge(&o.backaction);
        self.ring.extend_from_slice(&o.ring);
    }

    /// Median `|φ_opt - φ|` per sampled step, from the histogram bin centres.
    pub fn median_phase_error(&self) -> Vec<f64> {
        let w = std::f64::consts::FRAC_PI_2 / PHASE_ERROR_BINS as f64;
        self.phase_error
            .iter()
            .map(|h| {
                let total: u64 = h.iter().sum();
                if total == 0 {
                    return f64::NAN;
                }
                let half = total.div_ceil(2);
                let mut seen = 0;
                for (i, c) in h.iter().enumerate() {
                    seen += c;
                    if seen >= half {
                        return (i as f64 + 0.5) * w;
                    }
                }
                f64::NAN
            })
            .collect()
    }
}

struct PhaseErrorObserver<'a> {
    steps: &'a [usize],
    next: usize,
    hist: &'a mut [Vec<u64>],
}

impl Observer<f64> for PhaseErrorObserver<'_> {
    fn observe(&mut self, s: &StepView<'_, f64>) {
        if self.next < self.steps.len() && self.steps[self.next] == s.k {
            // oracle θ = arg R from the record and the applied phase; undefined before any signal
            if s.r_before != Complex::new(0.0, 0.0) {
                let err = phase_condition_error(s.phase.angle, s.r_before.arg()).abs();
                let bin = ((err / std::f64::consts::FRAC_PI_2) * PHASE_ERROR_BINS as f64) as usize;
                self.hist[self.next][bin.min(PHASE_ERROR_BINS - 1)] += 1;
            }
            self.next += 1;
        }
    }
}

/// Shared, immutable inputs of a run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub params: SimParams<f64>,
    pub mode: ModeShape<f64>,
    pub tables: Arc<FeedbackTables<f64>>,
    pub plan: Option<DiagnosticPlan>,
}

impl RunContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.sim_params()?;
        let mode = mode_shape_from_gamma(&params.sched);
        let tables = Arc::new(FeedbackTables::new(&mode, cfg.t_min_s));
        let plan = if cfg.diagnostics { Some(DiagnosticPlan::from_config(cfg)?) } else { None };
        Ok(Self { cfg: cfg.clone(), params, mode, tables, plan })
    }

    /// Runs one shot of `scheme`; returns the record row and, when
    /// `capture` is set, the applied phase program.
    pub fn run_shot(
        &self,
        scheme: Scheme,
        theta_index: usize,
        traj_index: usize,
        replay: Option<Arc<PhaseProgram<f64>>>,
        capture: bool,
    ) -> Result<(ShotRecord, Option<PhaseProgram<f64>>)> {
        let theta = self.cfg.thetas[theta_index];
        let seed = derive_seed(self.cfg.seed, theta_index as u64, traj_index as u64, stream_tag(scheme));
        let mut ctl = PhaseController::new(&self.cfg.controller(scheme), self.tables.clone(), replay)?;
        if capture {
            ctl = ctl.capture_history();
        }
        let mut noise = GaussianNoise::new(seed, self.params.grid().dt());
        let n = self.params.grid().n_steps();
        run_steps(&self.params, &mut ctl, DensityMatrix::equatorial(theta), &mut noise, n, &mut ())?;
        let r = ctl.accumulator();
        let record = ShotRecord { scheme, theta_index, traj_index, theta_true: theta, seed, r: (r.re, r.im) };
        let program = capture.then(|| ctl.into_program());
        Ok((record, program))
    }

    /// Re-simulates shot `(theta_index, traj_index)` of `scheme` with the
    /// full per-step record; identical to the corresponding [`Self::run_shot`].
    pub fn record_shot(
        &self,
        scheme: Scheme,
        theta_index: usize,
        traj_index: usize,
        replay: Option<Arc<PhaseProgram<f64>>>,
    ) -> Result<(TrajectoryRecord<f64>, Option<PhaseProgram<f64>>)> {
        let theta = self.cfg.thetas[theta_index];
        let seed = derive_seed(self.cfg.seed, theta_index as u64, traj_index as u64, stream_tag(scheme));
        let mut ctl = PhaseController::new(&self.cfg.controller(scheme), self.tables.clone(), replay)?;
        let capture = scheme == Scheme::Adaptive;
        if capture {
            ctl = ctl.capture_history();
        }
        let mut noise = GaussianNoise::new(seed, self.params.grid().dt());
        let rec = record_with_noise(&self.params, &mut ctl, DensityMatrix::equatorial(theta), &mut noise, seed)?;
        Ok((rec, capture.then(|| ctl.into_program())))
    }

    /// Runs one excited-state diagnostic shot of `scheme` into `agg`.
    /// Requires a diagnostic plan.
    pub fn run_diagnostic_shot(
        &self,
        scheme: Scheme,
        traj_index: usize,
        replay: Option<Arc<PhaseProgram<f64>>>,
        capture: bool,
        agg: &mut SchemeAggregate,
    ) -> Result<Option<PhaseProgram<f64>>> {
        let plan = self.plan.as_ref().expect("diagnostic shot without a plan");
        let master = derive_seed(self.cfg.seed, 0, 0, StreamTag::Diagnostic);
        let seed = derive_seed(master, 0, traj_index as u64, stream_tag(scheme));
        let mut ctl = PhaseController::new(&self.cfg.controller(scheme), self.tables.clone(), replay)?;
        if capture {
            ctl = ctl.capture_history();
        }
        let mut noise = GaussianNoise::new(seed, self.params.grid().dt());
        let mut ba = BackactionObserver::new(plan.windows.clone(), DEFAULT_COHERENCE_FLOOR);
        let mut snap = SnapshotObserver::new(vec![plan.ring_step]);
        let mut pe = PhaseErrorObserver { steps: &plan.phase_steps, next: 0, hist: &mut agg.phase_error };
        let mut obs = (&mut ba, (&mut snap, &mut pe));
        let n = self.params.grid().n_steps();
        run_steps(&self.params, &mut ctl, DensityMatrix::excited(), &mut noise, n, &mut obs)?;
        agg.backaction.add(&ba.finish());
        if let Some(b) = snap.snapshots[0] {
            agg.ring.push(b);
        }
        Ok(capture.then(|| ctl.into_program()))
    }
}

/// All shots of one scheme in `(Θ, trajectory)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeData {
    pub scheme: Scheme,
    pub shots: Vec<ShotRecord>,
    pub aggregate: Option<SchemeAggregate>,
}

impl SchemeData {
    pub fn estimates(&self) -> Vec<PhaseEstimate> {
        self.shots.iter().map(ShotRecord::estimate).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.shots.iter().map(|s| s.estimate()).filter(|e| !e.null).map(|e| e.error()).collect()
    }

    pub fn summarize(&self, bootstrap: usize, seed: u64) -> Result<EnsembleResult> {
        let b = (bootstrap > 0).then_some((bootstrap, seed));
        EnsembleResult::from_estimates(self.scheme, &self.estimates(), b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub plan: Option<DiagnosticPlan>,
    pub schemes: Vec<SchemeData>,
}

impl ExperimentData {
    pub fn scheme(&self, s: Scheme) -> Option<&SchemeData> {
        self.schemes.iter().find(|d| d.scheme == s)
    }
}

/// Canonical execution order of the configured schemes.
pub fn scheme_cycle(cfg: &ExperimentConfig) -> Vec<Scheme> {
    [Scheme::Adaptive, Scheme::Replay, Scheme::Heterodyne, Scheme::Homodyne]
        .into_iter()
        .filter(|s| cfg.schemes.contains(s))
        .collect()
}

/// Simulates every configured scheme for every `(Θ, trajectory)` pair.
pub fn simulate_experiment(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let ctx = RunContext::new(cfg)?;
    let cycle = scheme_cycle(cfg);
    let want_replay = cycle.contains(&Scheme::Replay);
    let total = cfg.thetas.len() * cfg.traj;
    let n_chunks = total.div_ceil(CHUNK);

    let chunks = par_map_indexed(n_chunks, cfg.workers, |c| {
        let mut shots: Vec<Vec<ShotRecord>> = vec![Vec::new(); cycle.len()];
        for j in c * CHUNK..((c + 1) * CHUNK).min(total) {
            let (ti, tr) = (j / cfg.traj, j % cfg.traj);
            let mut program = None;
            for (si, scheme) in cycle.iter().enumerate() {
                let replay = if *scheme == Scheme::Replay { program.take().map(Arc::new) } else { None };
                let capture = *scheme == Scheme::Adaptive && want_replay;
                let (rec, prog) = ctx.run_shot(*scheme, ti, tr, replay, capture)?;
                if prog.is_some() {
                    program = prog;
                }
                shots[si].push(rec);
            }
        }
        Ok(shots)
    })?;

    let n_diag = if ctx.plan.is_some() { cfg.diag_traj.unwrap_or(cfg.traj) } else { 0 };
    let diag_chunks = par_map_indexed(n_diag.div_ceil(CHUNK), cfg.workers, |c| {
        let plan = ctx.plan.as_ref().expect("diagnostics need a plan");
        let mut aggs: Vec<SchemeAggregate> = cycle.iter().map(|_| SchemeAggregate::new(plan)).collect();
        for j in c * CHUNK..((c + 1) * CHUNK).min(n_diag) {
            let mut program = None;
            for (agg, scheme) in aggs.iter_mut().zip(&cycle) {
                let replay = if *scheme == Scheme::Replay { program.take().map(Arc::new) } else { None };
                let capture = *scheme == Scheme::Adaptive && want_replay;
                if let Some(p) = ctx.run_diagnostic_shot(*scheme, j, replay, capture, agg)? {
                    program = Some(p);
                }
            }
        }
        Ok(aggs)
    })?;

    let mut schemes: Vec<SchemeData> = cycle
        .iter()
        .map(|s| SchemeData {
            scheme: *s,
            shots: Vec::with_capacity(total),
            aggregate: ctx.plan.as_ref().map(SchemeAggregate::new),
        })
        .collect();
    for shots in chunks {
        for (si, s) in shots.into_iter().enumerate() {
            schemes[si].shots.extend(s);
        }
    }
    for aggs in diag_chunks {
        for (si, a) in aggs.into_iter().enumerate() {
            if let Some(acc) = schemes[si].aggregate.as_mut() {
                acc.merge(&a);
            }
        }
    }
    Ok(ExperimentData { plan: ctx.plan, schemes })
}
