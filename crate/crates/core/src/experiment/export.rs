//! Figure-data export from a completed run directory.
//!
//! Each figure produces one fixed-schema CSV named `fig_<id>.csv`:
//!
//! | id | columns |
//! |----|---------|
//! | 1c | `time_s,u_per_s` |
//! | 3b | `scheme,time_s,median_abs_phase_error` |
//! | 3c | `scheme,traj_index,x,y,z,transverse` (excited-state diagnostic shots) |
//! | 3d | `scheme,time_s,rms_dtheta,rms_dtheta_se,n_shots_dtheta,rms_dz,rms_dz_se` |
//! | 4a | `scheme,bin_lo,bin_hi,bin_center,count` (64 bins over (−π, π]) |
//! | 4b | `scheme,n,null_count,holevo,holevo_se,ci_lo,ci_hi,sharpness,efficiency,efficiency_se` |
//! | 4c | `scheme,bin_lo,bin_hi,bin_center,count` (64 bins of \|R\|) |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::histogram::{Histogram, PHASE_BINS};
use crate::controller::Scheme;
use crate::error::{Error, Result};
use crate::experiment::manifest::{read_shots_csv, shots_file, Diagnostics, RunManifest, RunStatus, DIAGNOSTICS_FILE};
use crate::experiment::runner::ShotRecord;
use crate::modeshape::mode_shape_from_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    ModeShape,
    PhaseError,
    Ring,
    Backaction,
    EstimatorHistogram,
    Holevo,
    Amplitude,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::ModeShape,
        Figure::PhaseError,
        Figure::Ring,
        Figure::Backaction,
        Figure::EstimatorHistogram,
        Figure::Holevo,
        Figure::Amplitude,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::ModeShape => "1c",
            Figure::PhaseError => "3b",
            Figure::Ring => "3c",
            Figure::Backaction => "3d",
            Figure::EstimatorHistogram => "4a",
            Figure::Holevo => "4b",
            Figure::Amplitude => "4c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("fig").unwrap_or(&s).trim_start_matches(['.', '_', ' ']);
        Self::ALL.into_iter().find(|f| f.id() == s)
    }

    pub fn file_name(self) -> String {
        format!("fig_{}.csv", self.id())
    }
}

fn missing(what: impl Into<String>) -> Error {
    Error::MissingData(what.into())
}

struct RunData<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl RunData<'_> {
    fn schemes(&self) -> &[Scheme] {
        &self.manifest.config.schemes
    }

    fn shots(&self, s: Scheme) -> Result<Vec<ShotRecord>> {
        let path = self.dir.join(shots_file(s));
        if !path.exists() {
            return Err(missing(format!("{} shots ({})", s, path.display())));
        }
        read_shots_csv(&path)
    }

    fn diagnostics(&self) -> Result<Diagnostics> {
        let path = self.dir.join(DIAGNOSTICS_FILE);
        if !path.exists() {
            return Err(missing("diagnostics (run with diagnostics = true)"));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

fn histogram_rows(out: &mut String, scheme: Scheme, h: &Histogram) {
    for (i, c) in h.counts.iter().enumerate() {
        let (a, b) = h.edges(i);
        let _ = writeln!(out, "{scheme},{a:e},{b:e},{:e},{c}", 0.5 * (a + b));
    }
}

fn render(run: &RunData<'_>, fig: Figure) -> Result<String> {
    let mut out = String::new();
    match fig {
        Figure::ModeShape => {
            let mode = mode_shape_from_gamma(&run.manifest.config.schedule()?);
            let mut buf = Vec::new();
            mode.write_csv(&mut buf)?;
            out = String::from_utf8(buf).expect("ascii csv");
        }
        Figure::PhaseError => {
            let diag = run.diagnostics()?;
            out.push_str("scheme,time_s,median_abs_phase_error\n");
            for s in run.schemes() {
                let agg = diag.aggregates.get(s).ok_or_else(|| missing(format!("{s} diagnostics")))?;
                for (k, m) in diag.plan.phase_steps.iter().zip(agg.median_phase_error()) {
                    let _ = writeln!(out, "{s},{:e},{m:e}", *k as f64 * diag.plan.dt);
                }
            }
        }
        Figure::Ring => {
            let diag = run.diagnostics()?;
            out.push_str("scheme,traj_index,x,y,z,transverse\n");
            for s in run.schemes() {
                let agg = diag.aggregates.get(s).ok_or_else(|| missing(format!("{s} diagnostics")))?;
                for (i, b) in agg.ring.iter().enumerate() {
                    let _ = writeln!(out, "{s},{i},{:e},{:e},{:e},{:e}", b.x, b.y, b.z, b.transverse());
                }
            }
        }
        Figure::Backaction => {
            let diag = run.diagnostics()?;
            out.push_str("scheme,time_s,rms_dtheta,rms_dtheta_se,n_shots_dtheta,rms_dz,rms_dz_se\n");
            for s in run.schemes() {
                let agg = diag.aggregates.get(s).ok_or_else(|| missing(format!("{s} diagnostics")))?;
                for w in agg.backaction.stats(&diag.plan.windows) {
                    let _ = writeln!(
                        out,
                        "{s},{:e},{:e},{:e},{},{:e},{:e}",
                        diag.plan.window_center_time(&w.window),
                        w.rms_dtheta,
                        w.rms_dtheta_se,
                        w.n_shots_dtheta,
                        w.rms_dz,
                        w.rms_dz_se
                    );
                }
            }
        }
        Figure::EstimatorHistogram => {
            out.push_str("scheme,bin_lo,bin_hi,bin_center,count\n");
            for s in run.schemes() {
                let mut h = Histogram::phase();
                for e in run.shots(*s)?.iter().map(ShotRecord::estimate).filter(|e| !e.null) {
                    h.add(e.error());
                }
                histogram_rows(&mut out, *s, &h);
            }
        }
        Figure::Holevo => {
            let summary = run.manifest.summary.as_ref().ok_or_else(|| missing("run summary"))?;
            out.push_str("scheme,n,null_count,holevo,holevo_se,ci_lo,ci_hi,sharpness,efficiency,efficiency_se\n");
            for s in run.schemes() {
                let r = summary.result(*s).ok_or_else(|| missing(format!("{s} summary")))?;
                let _ = write!(out, "{s},{},{}", r.n_shots, r.null_count);
                match &r.holevo {
                    Some(h) => {
                        let (lo, hi) = h.holevo_ci.unwrap_or((f64::NAN, f64::NAN));
                        let _ = writeln!(
                            out,
                            ",{:e},{:e},{lo:e},{hi:e},{:e},{:e},{:e}",
                            h.holevo, h.holevo_se, h.sharpness, h.efficiency, h.efficiency_se
                        );
                    }
                    None => out.push_str(",NaN,NaN,NaN,NaN,NaN,NaN,NaN\n"),
                }
            }
        }
        Figure::Amplitude => {
            let per_scheme =
                run.schemes().iter().map(|s| Ok((*s, run.shots(*s)?))).collect::<Result<Vec<_>>>()?;
            let r_max = per_scheme
                .iter()
                .flat_map(|(_, v)| v.iter().map(|r| r.r.0.hypot(r.r.1)))
                .fold(0.0f64, f64::max);
            let hi = if r_max > 0.0 { r_max * (1.0 + 1e-9) } else { 1.0 };
            out.push_str("scheme,bin_lo,bin_hi,bin_center,count\n");
            for (s, shots) in &per_scheme {
                // |R| = 0 lands in the first bin rather than outside the left-open range
                let h = Histogram::from_samples(
                    -f64::EPSILON * hi,
                    hi,
                    PHASE_BINS,
                    shots.iter().map(|r| r.r.0.hypot(r.r.1)),
                );
                histogram_rows(&mut out, *s, &h);
            }
        }
    }
    Ok(out)
}

/// Writes the CSV for `fig` from the run in `run_dir` into `out_dir` and
/// returns its path.
pub fn export_figure_data(run_dir: &Path, fig: Figure, out_dir: &Path) -> Result<PathBuf> {
    let manifest = RunManifest::load(run_dir)?;
    if manifest.status != RunStatus::Complete {
        return Err(missing(format!("run in {} is incomplete", run_dir.display())));
    }
    let text = render(&RunData { dir: run_dir, manifest }, fig)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(fig.file_name());
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentConfig;
    use crate::experiment::manifest::run_experiment;

    #[test]
    fn figure_ids_parse() {
        for f in Figure::ALL {
            assert_eq!(Figure::parse(f.id()), Some(f));
        }
        assert_eq!(Figure::parse("Fig4A"), Some(Figure::EstimatorHistogram));
        assert_eq!(Figure::parse("5a"), None);
    }

    #[test]
    fn exports_every_figure() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            traj: 3,
            coarse: true,
            thetas: vec![0.0, 1.5],
            bootstrap: 0,
            out_dir: dir.path().join("run"),
            ..Default::default()
        };
        run_experiment(&cfg).unwrap();
        let mode = mode_shape_from_gamma(&cfg.schedule().unwrap());
        for f in Figure::ALL {
            let p = export_figure_data(&cfg.out_dir, f, &dir.path().join("fig")).unwrap();
            let text = fs::read_to_string(p).unwrap();
            let rows = text.lines().count() - 1;
            let expected = match f {
                Figure::ModeShape => mode.u.len(),
                Figure::EstimatorHistogram | Figure::Amplitude => 3 * PHASE_BINS,
                Figure::Ring => 3 * 3,
                Figure::Holevo => 3,
                Figure::PhaseError => 3 * 130,
                Figure::Backaction => 3 * 12,
            };
            assert_eq!(rows, expected, "{}", f.id());
        }
        let hist = fs::read_to_string(dir.path().join("fig/fig_4a.csv")).unwrap();
        let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, 18);
        let amp = fs::read_to_string(dir.path().join("fig/fig_4c.csv")).unwrap();
        let total: u64 = amp.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, 18);
    }

    #[test]
    fn mode_shape_export_matches_module_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            traj: 1,
            coarse: true,
            thetas: vec![0.0],
            bootstrap: 0,
            diagnostics: false,
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        run_experiment(&cfg).unwrap();
        let p = export_figure_data(dir.path(), Figure::ModeShape, dir.path()).unwrap();
        let mut expected = Vec::new();
        mode_shape_from_gamma(&cfg.schedule().unwrap()).write_csv(&mut expected).unwrap();
        assert_eq!(fs::read(p).unwrap(), expected);
        assert!(matches!(
            export_figure_data(dir.path(), Figure::Backaction, dir.path()),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn missing_scheme_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            traj: 1,
            coarse: true,
            thetas: vec![0.0],
            bootstrap: 0,
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        run_experiment(&cfg).unwrap();
        fs::remove_file(dir.path().join(shots_file(Scheme::Heterodyne))).unwrap();
        assert!(matches!(
            export_figure_data(dir.path(), Figure::EstimatorHistogram, dir.path()),
            Err(Error::MissingData(_))
        ));
        assert!(export_figure_data(Path::new("/nonexistent/run"), Figure::Holevo, dir.path()).is_err());
    }
}
