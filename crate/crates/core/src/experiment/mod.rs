//! End-to-end experiment driver: configuration, ensemble runs, persistence,
//! heterodyne sweeps and filter validation.

pub mod config;
pub mod export;
pub mod manifest;
pub mod runner;
pub mod sweep;
pub mod validate;

pub use config::{equally_spaced_thetas, ExperimentConfig};
pub use export::{export_figure_data, Figure};
pub use manifest::{run_experiment, read_shots_csv, RunManifest, RunStatus, Summary};
pub use runner::{simulate_experiment, ExperimentData, RunContext, ShotRecord};
pub use sweep::{noise_anisotropy_exact, noise_anisotropy_sampled, sweep_heterodyne, SweepPoint};
pub use validate::{run_validation, ValidationSuite};
