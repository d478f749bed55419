//! Reductions of trajectory ensembles to figures of merit.

pub mod backaction;
pub mod circular;
pub mod estimator;
pub mod histogram;
pub mod rabi;
pub mod validation;

pub use backaction::{backaction_stats, ring_stats, RingStats, Window, WindowStats};
pub use circular::{holevo_variance, intrinsic_efficiency, sharpness, summarize, HolevoSummary};
pub use estimator::{compute_r, EnsembleResult, PhaseEstimate};
pub use histogram::{chi_square_one_plus_cos, Histogram};
pub use rabi::rabi_tracking_limits;
pub use validation::{validate_filter, ValidationConfig, ValidationReport};
