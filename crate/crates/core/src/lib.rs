//! Monte Carlo simulation of single-photon canonical phase measurement by
//! adaptive dyne detection.
//!
//! A two-level emitter prepared in `(|-⟩ + e^{iΘ}|+⟩)/√2` decays with a
//! commandable rate `γ(t)` and its fluorescence is measured in a quadrature
//! set by the pump phase `φ(t)`. The crate propagates the conditioned state,
//! emulates the feedback controller (delay, filter, replay), and evaluates
//! the resulting phase estimates.
//!
//! The numerical core is generic over the scalar type; the `*64` aliases
//! below fix it to `f64`, which the ensemble and experiment layers use.

pub mod analysis;
pub mod controller;
pub mod dump;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod modeshape;
pub mod noise;
pub mod scalar;
pub mod serde_float;
pub mod sme;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DensityMatrix64 = state::DensityMatrix<f64>;
pub type DensityMatrix32 = state::DensityMatrix<f32>;
pub type PureAmplitudes64 = state::PureAmplitudes<f64>;
pub type BlochVector64 = state::BlochVector<f64>;
pub type TimeGrid64 = grid::TimeGrid<f64>;
pub type GammaSchedule64 = modeshape::GammaSchedule<f64>;
pub type ModeShape64 = modeshape::ModeShape<f64>;
pub type SimParams64 = sme::SimParams<f64>;
pub type ControllerConfig64 = controller::ControllerConfig<f64>;
pub type PhaseController64 = controller::PhaseController<f64>;
pub type FeedbackTables64 = controller::FeedbackTables<f64>;
pub type PhaseProgram64 = controller::PhaseProgram<f64>;
pub type TrajectoryRecord64 = trajectory::TrajectoryRecord<f64>;
pub type NoisePath64 = noise::NoisePath<f64>;
