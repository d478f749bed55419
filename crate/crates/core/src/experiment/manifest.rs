//! Run persistence: per-shot CSVs, summary and diagnostics JSON, manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::circular::holevo_two_sample_p;
use crate::analysis::estimator::EnsembleResult;
use crate::controller::Scheme;
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::dump;
use crate::experiment::runner::{
    scheme_cycle, simulate_experiment, DiagnosticPlan, ExperimentData, RunContext, SchemeAggregate, ShotRecord,
};
use crate::noise::{derive_seed, StreamTag};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

pub fn shots_file(s: Scheme) -> String {
    format!("shots_{}.csv", s.name())
}

/// Concatenated binary trajectory dumps of the first `dump_traj` shots.
pub fn dump_file(s: Scheme) -> String {
    format!("traj_{}.bin", s.name())
}

/// CSV of the first dumped trajectory.
pub fn trajectory_csv_file(s: Scheme) -> String {
    format!("traj_{}_0.csv", s.name())
}

/// Concatenated phase-program dumps of the dumped adaptive shots.
pub const PROGRAMS_FILE: &str = "programs_adaptive.bin";

fn persist_dumps(dir: &Path, cfg: &ExperimentConfig, files: &mut BTreeMap<String, String>) -> Result<()> {
    let ctx = RunContext::new(cfg)?;
    let cycle = scheme_cycle(cfg);
    let n = cfg.dump_traj.min(cfg.traj);
    let mut writers = cycle
        .iter()
        .map(|s| Ok(BufWriter::new(fs::File::create(dir.join(dump_file(*s)))?)))
        .collect::<Result<Vec<_>>>()?;
    let mut programs = cycle
        .contains(&Scheme::Adaptive)
        .then(|| fs::File::create(dir.join(PROGRAMS_FILE)).map(BufWriter::new))
        .transpose()?;
    for tr in 0..n {
        let mut program = None;
        for (w, scheme) in writers.iter_mut().zip(&cycle) {
            let replay = if *scheme == Scheme::Replay { program.take().map(Arc::new) } else { None };
            let (rec, prog) = ctx.record_shot(*scheme, 0, tr, replay)?;
            dump::write_trajectory(&mut *w, &rec)?;
            if tr == 0 {
                rec.write_csv(BufWriter::new(fs::File::create(dir.join(trajectory_csv_file(*scheme)))?))?;
            }
            if let (Some(p), Some(out)) = (&prog, programs.as_mut()) {
                dump::write_phase_program(&mut *out, p)?;
            }
            if prog.is_some() {
                program = prog;
            }
        }
    }
    for w in &mut writers {
        w.flush()?;
    }
    if let Some(p) = programs.as_mut() {
        p.flush()?;
        files.insert("programs_adaptive".into(), PROGRAMS_FILE.into());
    }
    for s in &cycle {
        files.insert(format!("traj_{}", s.name()), dump_file(*s));
        files.insert(format!("traj_{}_csv", s.name()), trajectory_csv_file(*s));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngProvenance {
    pub master_seed: u64,
    pub generator: String,
    pub derivation: String,
}

impl RngProvenance {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            generator: "ChaCha8, standard normal increments scaled by sqrt(dt)".into(),
            derivation: "seed = splitmix64 chain over (master_seed, theta_index, traj_index, stream); \
                         streams: adaptive=1 replay=2 heterodyne=3 homodyne=4 tomography=5 bootstrap=8"
                .into(),
        }
    }
}

/// Cross-scheme comparisons reported with the summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    /// `1 - V_adaptive / V_heterodyne`.
    #[serde(with = "crate::serde_float::option")]
    pub adaptive_improvement_over_heterodyne: Option<f64>,
    #[serde(with = "crate::serde_float::option")]
    pub adaptive_improvement_se: Option<f64>,
    /// Two-sided p-value of equal Holevo variance for replay vs heterodyne.
    #[serde(with = "crate::serde_float::option")]
    pub replay_vs_heterodyne_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub results: Vec<EnsembleResult>,
    pub comparisons: Comparisons,
}

impl Summary {
    pub fn result(&self, s: Scheme) -> Option<&EnsembleResult> {
        self.results.iter().find(|r| r.scheme == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub plan: DiagnosticPlan,
    pub aggregates: BTreeMap<Scheme, SchemeAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub rng: RngProvenance,
    /// Output files relative to the run directory.
    pub files: BTreeMap<String, String>,
    pub summary: Option<Summary>,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The manifest with the wall-clock entry cleared.
    pub fn reproducible_part(&self) -> Self {
        Self { wall_clock_s: 0.0, ..self.clone() }
    }
}

pub fn summarize_experiment(data: &ExperimentData, cfg: &ExperimentConfig) -> Result<Summary> {
    let results = data
        .schemes
        .iter()
        .map(|d| {
            let seed = derive_seed(cfg.seed, 0, d.scheme as u64, StreamTag::Bootstrap);
            d.summarize(cfg.bootstrap, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let holevo = |s: Scheme| results.iter().find(|r| r.scheme == s).and_then(|r| r.holevo);
    let (a, h, r) = (holevo(Scheme::Adaptive), holevo(Scheme::Heterodyne), holevo(Scheme::Replay));
    let (imp, imp_se) = match (a, h) {
        (Some(a), Some(h)) if h.holevo.is_finite() && h.holevo > 0.0 => {
            let ratio = a.holevo / h.holevo;
            let se = ratio * ((a.holevo_se / a.holevo).powi(2) + (h.holevo_se / h.holevo).powi(2)).sqrt();
            (Some(1.0 - ratio), Some(se))
        }
        _ => (None, None),
    };
    let replay_p = match (r, h) {
        (Some(r), Some(h)) => Some(holevo_two_sample_p(&r, &h)),
        _ => None,
    };
    Ok(Summary {
        results,
        comparisons: Comparisons {
            adaptive_improvement_over_heterodyne: imp,
            adaptive_improvement_se: imp_se,
            replay_vs_heterodyne_p: replay_p,
        },
    })
}

pub fn write_shots_csv<W: Write>(mut w: W, shots: &[ShotRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", ShotRecord::CSV_HEADER)?;
    for s in shots {
        writeln!(w, "{}", s.csv_row())?;
    }
    w.flush()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn persist(
    dir: &Path,
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    summary: &Summary,
    files: &mut BTreeMap<String, String>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    files.insert("config".into(), CONFIG_FILE.into());
    for d in &data.schemes {
        let name = shots_file(d.scheme);
        write_shots_csv(BufWriter::new(fs::File::create(dir.join(&name))?), &d.shots)?;
        files.insert(format!("shots_{}", d.scheme.name()), name);
    }
    write_json(&dir.join(SUMMARY_FILE), summary)?;
    files.insert("summary".into(), SUMMARY_FILE.into());
    if let Some(plan) = &data.plan {
        let diag = Diagnostics {
            plan: plan.clone(),
            aggregates: data.schemes.iter().filter_map(|d| d.aggregate.clone().map(|a| (d.scheme, a))).collect(),
        };
        write_json(&dir.join(DIAGNOSTICS_FILE), &diag)?;
        files.insert("diagnostics".into(), DIAGNOSTICS_FILE.into());
    }
    if cfg.dump_traj > 0 {
        persist_dumps(dir, cfg, files)?;
    }
    Ok(())
}

/// Simulates, summarizes and persists a run under `cfg.out_dir`. On a
/// persistence failure a partial manifest is written when possible and the
/// error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let data = simulate_experiment(cfg)?;
    let summary = summarize_experiment(&data, cfg)?;
    let dir: PathBuf = cfg.out_dir.clone();
    let mut files = BTreeMap::new();
    let outcome = persist(&dir, cfg, &data, &summary, &mut files);
    let mut manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Complete,
        error: None,
        config: cfg.clone(),
        rng: RngProvenance::new(cfg.seed),
        files,
        summary: Some(summary),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = outcome {
        manifest.status = RunStatus::Partial;
        manifest.error = Some(e.to_string());
        let _ = write_json(&dir.join(MANIFEST_FILE), &manifest);
        return Err(e);
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reads back a per-shot CSV written by [`write_shots_csv`].
pub fn read_shots_csv(path: &Path) -> Result<Vec<ShotRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(ShotRecord::CSV_HEADER) {
        return Err(Error::Format(format!("{}: unexpected header", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Format(format!("{}: line {}", path.display(), i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(ShotRecord {
                scheme: Scheme::parse(f[0]).ok_or_else(bad)?,
                theta_index: f[1].parse().map_err(|_| bad())?,
                traj_index: f[2].parse().map_err(|_| bad())?,
                theta_true: num(f[3])?,
                seed: f[4].parse().map_err(|_| bad())?,
                r: (num(f[5])?, num(f[6])?),
            })
        })
        .collect()
}
