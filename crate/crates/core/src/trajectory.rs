//! Single-trajectory driver: controller → pump phase → noise → SME step →
//! record → controller.

use std::io::Write;

use num_complex::Complex;

use crate::controller::{Controller, Phase};
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::noise::{GaussianNoise, NoisePath, NoiseSource};
use crate::scalar::Real;
use crate::sme::{step_sme, SimParams};
use crate::state::{BlochVector, DensityMatrix};

/// Everything observable about one step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a, T> {
    pub k: usize,
    pub t: T,
    pub gamma: T,
    pub phase: Phase<T>,
    pub dw: T,
    pub v_dt: T,
    pub rho_before: &'a DensityMatrix<T>,
    pub rho_after: &'a DensityMatrix<T>,
    /// Record integral accumulated before this step.
    pub r_before: Complex<T>,
}

/// Per-step hook used to reduce a trajectory on the fly.
pub trait Observer<T> {
    fn observe(&mut self, step: &StepView<'_, T>);
}

impl<T> Observer<T> for () {
    #[inline(always)]
    fn observe(&mut self, _: &StepView<'_, T>) {}
}

impl<T, A: Observer<T>, B: Observer<T>> Observer<T> for (A, B) {
    #[inline(always)]
    fn observe(&mut self, step: &StepView<'_, T>) {
        self.0.observe(step);
        self.1.observe(step);
    }
}

impl<T, O: Observer<T> + ?Sized> Observer<T> for &mut O {
    #[inline(always)]
    fn observe(&mut self, step: &StepView<'_, T>) {
        (**self).observe(step);
    }
}

/// Runs the first `n_steps` steps of the grid and returns the final state.
pub fn run_steps<T, C, N, O>(
    params: &SimParams<T>,
    controller: &mut C,
    initial: DensityMatrix<T>,
    noise: &mut N,
    n_steps: usize,
    observer: &mut O,
) -> Result<DensityMatrix<T>>
where
    T: Real,
    C: Controller<T> + ?Sized,
    N: NoiseSource<T> + ?Sized,
    O: Observer<T> + ?Sized,
{
    let grid = params.grid();
    let dt = grid.dt();
    let n = n_steps.min(grid.n_steps());
    let mut rho = initial;
    for k in 0..n {
        let phase = controller.next_phase(k)?;
        let gamma = params.sched.gamma[k];
        let dw = noise.next_dw();
        let r_before = controller.accumulator();
        let (next, v_dt) = step_sme(&rho, gamma, phase.phasor, params, dw, dt, k)?;
        controller.ingest_record(v_dt, k);
        observer.observe(&StepView {
            k,
            t: grid.time(k),
            gamma,
            phase,
            dw,
            v_dt,
            rho_before: &rho,
            rho_after: &next,
            r_before,
        });
        rho = next;
    }
    Ok(rho)
}

/// Full per-step record of one trajectory. `bloch[k]` is the conditioned
/// state at the start of step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub grid: TimeGrid<T>,
    pub v_dt: Vec<T>,
    pub phi: Vec<T>,
    pub bloch: Vec<BlochVector<T>>,
    pub dw_used: NoisePath<T>,
    pub final_state: DensityMatrix<T>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn len(&self) -> usize {
        self.v_dt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_dt.is_empty()
    }

    /// CSV with columns `t,V_dt,phi,x,y,z`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,V_dt,phi,x,y,z")?;
        for k in 0..self.len() {
            let b = self.bloch[k];
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                self.grid.time(k).as_f64(),
                self.v_dt[k].as_f64(),
                self.phi[k].as_f64(),
                b.x.as_f64(),
                b.y.as_f64(),
                b.z.as_f64()
            )?;
        }
        Ok(())
    }
}

struct Recorder<T> {
    v_dt: Vec<T>,
    phi: Vec<T>,
    bloch: Vec<BlochVector<T>>,
    dw: Vec<T>,
}

impl<T: Real> Observer<T> for Recorder<T> {
    fn observe(&mut self, s: &StepView<'_, T>) {
        self.v_dt.push(s.v_dt);
        self.phi.push(s.phase.angle);
        self.bloch.push(s.rho_before.bloch());
        self.dw.push(s.dw);
    }
}

/// Simulates and records a whole trajectory with Gaussian noise seeded by `seed`.
pub fn simulate_trajectory<T, C>(
    params: &SimParams<T>,
    controller: &mut C,
    initial: DensityMatrix<T>,
    seed: u64,
) -> Result<TrajectoryRecord<T>>
where
    T: Real,
    C: Controller<T> + ?Sized,
{
    let mut noise = GaussianNoise::new(seed, params.grid().dt());
    record_with_noise(params, controller, initial, &mut noise, seed)
}

/// As [`simulate_trajectory`] but driven by an explicit noise source.
pub fn record_with_noise<T, C, N>(
    params: &SimParams<T>,
    controller: &mut C,
    initial: DensityMatrix<T>,
    noise: &mut N,
    seed: u64,
) -> Result<TrajectoryRecord<T>>
where
    T: Real,
    C: Controller<T> + ?Sized,
    N: NoiseSource<T> + ?Sized,
{
    let grid = *params.grid();
    let n = grid.n_steps();
    let mut rec = Recorder {
        v_dt: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        bloch: Vec::with_capacity(n),
        dw: Vec::with_capacity(n),
    };
    let final_state = run_steps(params, controller, initial, noise, n, &mut rec)?;
    Ok(TrajectoryRecord {
        grid,
        v_dt: rec.v_dt,
        phi: rec.phi,
        bloch: rec.bloch,
        dw_used: NoisePath { seed, dt: grid.dt(), dw: rec.dw },
        final_state,
    })
}
