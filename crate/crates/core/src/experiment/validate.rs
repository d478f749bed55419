//! Filter-validation campaign over schemes and check times, with a
//! mis-set-efficiency negative control.

use serde::{Deserialize, Serialize};

use crate::analysis::validation::{simulate_validation_shots, validate_filter, ValidationConfig, ValidationReport};
use crate::controller::Scheme;
use crate::error::Result;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::runner::RunContext;

/// Negative controls count as detected below this combined p-value.
pub const DETECTION_P: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeValidation {
    pub scheme: Scheme,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSuite {
    pub check_times_s: Vec<f64>,
    pub n_shots: usize,
    pub schemes: Vec<SchemeValidation>,
    /// Filter run with twice the true efficiency (capped at 1).
    pub negative_control: SchemeValidation,
    pub negative_control_eta: f64,
    pub negative_control_detected: bool,
}

impl ValidationSuite {
    pub fn all_pass(&self) -> bool {
        self.schemes.iter().all(|s| s.report.all_within)
    }
}

pub fn run_validation(
    cfg: &ExperimentConfig,
    schemes: &[Scheme],
    check_times_s: &[f64],
    n_shots: usize,
) -> Result<ValidationSuite> {
    let ctx = RunContext::new(&ExperimentConfig { diagnostics: false, ..cfg.clone() })?;
    let grid = *ctx.params.grid();
    let vcfg = ValidationConfig::standard(check_times_s.iter().map(|t| grid.index_of(*t)).collect());
    let run = |scheme: Scheme, filter_eta: f64| -> Result<SchemeValidation> {
        let mut filter = ctx.params.clone();
        filter.eta = filter_eta;
        let shots = simulate_validation_shots(
            &ctx.params,
            &filter,
            &cfg.controller(scheme),
            ctx.tables.clone(),
            &vcfg,
            n_shots,
            cfg.seed,
            cfg.workers,
        )?;
        Ok(SchemeValidation { scheme, report: validate_filter(&shots, &vcfg)? })
    };
    let results = schemes.iter().map(|s| run(*s, cfg.eta)).collect::<Result<Vec<_>>>()?;
    let wrong_eta = (2.0 * cfg.eta).min(1.0);
    let control_scheme = if schemes.contains(&Scheme::Heterodyne) { Scheme::Heterodyne } else { schemes[0] };
    let negative_control = run(control_scheme, wrong_eta)?;
    let detected = negative_control.report.p_value < DETECTION_P;
    Ok(ValidationSuite {
        check_times_s: check_times_s.to_vec(),
        n_shots,
        schemes: results,
        negative_control,
        negative_control_eta: wrong_eta,
        negative_control_detected: detected,
    })
}
