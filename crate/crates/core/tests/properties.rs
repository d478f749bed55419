//! Property tests for the structural invariants of the simulator.

use std::f64::consts::PI;
use std::sync::Arc;

use canonphase::analysis::circular::holevo_variance;
use canonphase::analysis::histogram::{Histogram, PHASE_BINS};
use canonphase::controller::{Controller, ControllerConfig, FeedbackTables, PhaseController, Scheme};
use canonphase::grid::TimeGrid;
use canonphase::modeshape::{flat_gamma, mode_shape_from_gamma, GainTable, GammaSchedule, ModeShape};
use canonphase::noise::{derive_seed, GaussianNoise, StreamTag};
use canonphase::sme::SimParams;
use canonphase::state::{rho_from_bloch, BlochVector};
use canonphase::trajectory::{run_steps, simulate_trajectory, Observer, StepView};
use proptest::prelude::*;

struct Integrity {
    worst_trace: f64,
    worst_eig: f64,
    worst_y: f64,
}

impl Observer<f64> for Integrity {
    fn observe(&mut self, s: &StepView<'_, f64>) {
        self.worst_trace = self.worst_trace.max((s.rho_after.trace() - 1.0).abs());
        self.worst_eig = self.worst_eig.min(s.rho_after.min_eigenvalue());
        self.worst_y = self.worst_y.max(s.rho_after.bloch().y.abs());
    }
}

fn integrity() -> Integrity {
    Integrity { worst_trace: 0.0, worst_eig: f64::INFINITY, worst_y: 0.0 }
}

fn tables(mode: &ModeShape<f64>) -> Arc<FeedbackTables<f64>> {
    Arc::new(FeedbackTables::new(mode, None))
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Homodyne), Just(Scheme::Heterodyne), Just(Scheme::Adaptive)]
}

fn bloch_in_ball() -> impl Strategy<Value = BlochVector<f64>> {
    (0.0f64..=1.0, -1.0f64..=1.0, 0.0f64..(2.0 * PI))
        .prop_map(|(r, c, a)| {
            let s = (1.0 - c * c).sqrt();
            BlochVector::new(r * s * a.cos(), r * s * a.sin(), r * c)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kraus_steps_preserve_trace_and_positivity(
        eta in 0.05f64..=1.0,
        gt2 in 0.0f64..2e5,
        rate in 1e5f64..5e6,
        dt_ns in prop_oneof![Just(1.0f64), Just(2.0), Just(4.0)],
        s in scheme(),
        b in bloch_in_ball(),
        seed in any::<u64>(),
    ) {
        let grid = TimeGrid::new(dt_ns * 1e-9, 2e-6).unwrap();
        let sched = GammaSchedule::constant(rate, grid).unwrap();
        let mode = mode_shape_from_gamma(&sched);
        let params = SimParams::new(eta, gt2, sched).unwrap();
        let cfg = ControllerConfig { f_het: 5e5, ..ControllerConfig::new(s) }.with_delay(100e-9);
        let mut c = PhaseController::new(&cfg, tables(&mode), None).unwrap();
        let mut obs = integrity();
        let mut noise = GaussianNoise::new(seed, grid.dt());
        run_steps(&params, &mut c, rho_from_bloch(&b), &mut noise, grid.n_steps(), &mut obs).unwrap();
        prop_assert!(obs.worst_trace <= 1e-9, "trace error {}", obs.worst_trace);
        prop_assert!(obs.worst_eig >= -1e-9, "eigenvalue {}", obs.worst_eig);
    }

    #[test]
    fn fixed_quadrature_keeps_state_in_measurement_plane(
        eta in 0.05f64..=1.0,
        gt2 in 0.0f64..2e5,
        x in -1.0f64..=1.0,
        zf in -1.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let z = zf * (1.0 - x * x).sqrt();
        let grid = TimeGrid::new(1e-9, 13e-6).unwrap();
        let sched = flat_gamma(10e-6, 1.4e6, grid).unwrap();
        let mode = mode_shape_from_gamma(&sched);
        let params = SimParams::new(eta, gt2, sched).unwrap();
        let mut c = PhaseController::new(&ControllerConfig::homodyne(0.0), tables(&mode), None).unwrap();
        let mut obs = integrity();
        let mut noise = GaussianNoise::new(seed, grid.dt());
        run_steps(&params, &mut c, rho_from_bloch(&BlochVector::new(x, 0.0, z)), &mut noise, grid.n_steps(), &mut obs)
            .unwrap();
        prop_assert!(obs.worst_y <= 1e-6, "|y| reached {}", obs.worst_y);
    }

    #[test]
    fn gain_squared_times_emitted_is_intensity(
        tau_us in 2.0f64..20.0,
        cap in 1.5f64..50.0,
        t_min_steps in 1usize..40,
    ) {
        let tau = tau_us * 1e-6;
        let grid = TimeGrid::new(tau / 2000.0, 1.3 * tau).unwrap();
        let mode = mode_shape_from_gamma(&flat_gamma(tau, cap / tau, grid).unwrap());
        let t_min = t_min_steps as f64 * grid.dt();
        let table = GainTable::new(&mode, t_min);
        for k in t_min_steps..mode.u.len() {
            if mode.u[k] > 0.0 && mode.cumulative[k] > 0.0 {
                let lhs = table.gain[k].powi(2) * mode.cumulative[k];
                prop_assert!((lhs - mode.u[k]).abs() <= 1e-12 * mode.u[k], "k={} {} vs {}", k, lhs, mode.u[k]);
            }
        }
    }

    #[test]
    fn flat_mode_is_flat_before_the_cap(
        tau_us in 2.0f64..20.0,
        cap in 20.0f64..200.0,
    ) {
        // cap crossover at τ - 1/γ_max lies beyond 0.9τ
        let tau = tau_us * 1e-6;
        let grid = TimeGrid::new(tau / 10_000.0, 1.3 * tau).unwrap();
        let mode = mode_shape_from_gamma(&flat_gamma(tau, cap / tau, grid).unwrap());
        let end = grid.index_of(0.9 * tau);
        let u0 = mode.u[0];
        for k in 0..=end {
            prop_assert!((mode.u[k] / u0 - 1.0).abs() <= 1e-3, "k={} u/u0={}", k, mode.u[k] / u0);
        }
    }

    #[test]
    fn record_first_moves_phase_after_the_delay(
        delay_steps in 1usize..300,
        k0 in 0usize..500,
        filter in prop_oneof![Just(0.0f64), Just(128e-9)],
    ) {
        let dt = 1e-9;
        let grid = TimeGrid::new(dt, 1e-6).unwrap();
        let mode = mode_shape_from_gamma(&flat_gamma(0.8e-6, 1e8, grid).unwrap());
        let cfg = ControllerConfig::adaptive().with_delay(delay_steps as f64 * dt).with_filter(filter);
        let mut c = PhaseController::new(&cfg, tables(&mode), None).unwrap().capture_history();
        for k in 0..grid.n_steps() {
            c.next_phase(k).unwrap();
            c.ingest_record(if k == k0 { 1e-3 } else { 0.0 }, k);
        }
        let phi = c.phi_history();
        let first = phi.iter().position(|p| *p != 0.0);
        let expected = k0 + delay_steps;
        if expected < grid.n_steps() {
            prop_assert_eq!(first, Some(expected));
        } else {
            prop_assert_eq!(first, None);
        }
    }

    #[test]
    fn replay_reproduces_its_program_bitwise(seed_a in any::<u64>(), seed_b in any::<u64>(), theta in -PI..PI) {
        let grid = TimeGrid::new(4e-9, 13e-6).unwrap();
        let sched = flat_gamma(10e-6, 1.4e6, grid).unwrap();
        let mode = mode_shape_from_gamma(&sched);
        let t = tables(&mode);
        let params = SimParams::new(0.4, 6e4, sched).unwrap();
        let init = canonphase::state::DensityMatrix::equatorial(theta);
        let cfg = ControllerConfig::adaptive().with_delay(374e-9).with_filter(128e-9);
        let mut a = PhaseController::new(&cfg, t.clone(), None).unwrap().capture_history();
        simulate_trajectory(&params, &mut a, init, seed_a).unwrap();
        let program = Arc::new(a.into_program());
        let mut r = PhaseController::new(&ControllerConfig::replay(), t, Some(program.clone())).unwrap();
        let rec = simulate_trajectory(&params, &mut r, init, seed_b).unwrap();
        prop_assert!(rec.phi.iter().zip(&program.phi).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn holevo_variance_is_rotation_invariant(
        xs in proptest::collection::vec(-PI..PI, 3..200),
        shift in -10.0f64..10.0,
    ) {
        let a = holevo_variance(&xs);
        let b = holevo_variance(&xs.iter().map(|x| x + shift).collect::<Vec<_>>());
        match (a, b) {
            (Ok(a), Ok(b)) if a.is_finite() => prop_assert!((a - b).abs() <= 1e-6 * a.max(1.0)),
            (Ok(a), Ok(b)) => prop_assert_eq!(a.is_finite(), b.is_finite()),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn phase_histogram_keeps_every_sample(xs in proptest::collection::vec(-PI..=PI, 0..500)) {
        let h = Histogram::from_samples(-PI, PI, PHASE_BINS, xs.iter().copied().filter(|x| *x > -PI));
        prop_assert_eq!(h.total() as usize + h.outside as usize, xs.iter().filter(|x| **x > -PI).count());
        prop_assert_eq!(h.outside, 0);
    }

    #[test]
    fn seed_streams_do_not_collide(master in any::<u64>(), ti in 0u64..64, tr in 0u64..100_000) {
        let tags = [StreamTag::Adaptive, StreamTag::Replay, StreamTag::Heterodyne, StreamTag::Homodyne, StreamTag::Tomography];
        let seeds: Vec<u64> = tags.iter().map(|t| derive_seed(master, ti, tr, *t)).collect();
        for i in 0..seeds.len() {
            for j in 0..i {
                prop_assert_ne!(seeds[i], seeds[j]);
            }
        }
        prop_assert_ne!(derive_seed(master, ti, tr, StreamTag::Adaptive), derive_seed(master, ti, tr + 1, StreamTag::Adaptive));
        prop_assert_ne!(derive_seed(master, ti, tr, StreamTag::Adaptive), derive_seed(master, ti + 1, tr, StreamTag::Adaptive));
    }
}
