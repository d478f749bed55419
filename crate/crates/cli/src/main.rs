//! `canonphase` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 numerical-integrity failure (positivity or non-finite noise during
//! integration, or a failed filter validation).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use canonphase::experiment::{
    export_figure_data, run_experiment, run_validation, sweep_heterodyne, ExperimentConfig, Figure,
};
use canonphase::modeshape::mode_shape_from_gamma;
use canonphase::controller::Scheme;
use canonphase::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "canonphase", version, about = "Adaptive canonical phase measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive / replay / heterodyne ensemble and persist results.
    Run(RunArgs),
    /// Intrinsic efficiency of heterodyne detection versus frequency.
    SweepHet(SweepArgs),
    /// Binned filter-validation test with a mis-set-efficiency control.
    Validate(ValidateArgs),
    /// Write the emission mode shape as `time_s,u_per_s` CSV.
    Modeshape(ModeshapeArgs),
    /// Emit figure CSVs from a completed run directory.
    Export(ExportArgs),
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from ideal settings (η = 1, no dephasing, delay or filter).
    #[arg(long)]
    ideal: bool,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "gamma-t2-hz")]
    gamma_t2_hz: Option<f64>,
    #[arg(long = "delay-ns")]
    delay_ns: Option<f64>,
    #[arg(long = "filter-ns")]
    filter_ns: Option<f64>,
    #[arg(long = "f-het-hz")]
    f_het_hz: Option<f64>,
    #[arg(long = "tau-us")]
    tau_us: Option<f64>,
    #[arg(long = "t-total-us")]
    t_total_us: Option<f64>,
    #[arg(long = "dt-ns")]
    dt_ns: Option<f64>,
    /// Trajectories per phase and scheme.
    #[arg(long)]
    traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scheme(s): adaptive, replay, heterodyne, homodyne (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Number of equally spaced true phases.
    #[arg(long = "n-theta")]
    n_theta: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// dt = 4 ns smoke-test grid.
    #[arg(long)]
    coarse: bool,
    /// kraus or euler.
    #[arg(long)]
    integrator: Option<String>,
    /// Extra `key=value` config entries.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Heterodyne frequencies in Hz.
    #[arg(long = "f-list-hz", value_delimiter = ',', default_value = "0,25e3,5e4,1e5,2e5,5e5,1e6")]
    f_list_hz: Vec<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Shots per scheme.
    #[arg(long, default_value_t = 6000)]
    shots: usize,
    /// Check times in μs.
    #[arg(long = "check-us", value_delimiter = ',', default_value = "2,4,6,8,10")]
    check_us: Vec<f64>,
}

#[derive(Args)]
struct ModeshapeArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Constant emission rate in s⁻¹ instead of the flat-mode schedule.
    #[arg(long = "gamma-const")]
    gamma_const: Option<f64>,
}

#[derive(Args)]
struct ExportArgs {
    /// Directory of a completed `run`.
    #[arg(long = "run-dir")]
    run_dir: PathBuf,
    /// Figure id (1c, 3b, 3c, 3d, 4a, 4b, 4c) or `all`.
    #[arg(long, default_value = "all")]
    figure: String,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn build_config(a: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::parse(
            &fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        )?,
        None if a.ideal => ExperimentConfig::ideal(),
        None => ExperimentConfig::default(),
    };
    if a.config.is_some() && a.ideal {
        (cfg.eta, cfg.gamma_t2, cfg.delay_s, cfg.filter_s) = (1.0, 0.0, 0.0, 0.0);
    }
    let ns = 1e-9;
    let us = 1e-6;
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.gamma_t2_hz {
        cfg.gamma_t2 = v;
    }
    if let Some(v) = a.delay_ns {
        cfg.delay_s = v * ns;
    }
    if let Some(v) = a.filter_ns {
        cfg.filter_s = v * ns;
    }
    if let Some(v) = a.f_het_hz {
        cfg.f_het = v;
    }
    if let Some(v) = a.tau_us {
        cfg.tau_s = v * us;
    }
    if let Some(v) = a.t_total_us {
        cfg.t_total_s = v * us;
    }
    if let Some(v) = a.dt_ns {
        cfg.dt_s = v * ns;
    }
    if let Some(v) = a.traj {
        cfg.traj = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if !a.scheme.is_empty() {
        cfg.schemes = a
            .scheme
            .iter()
            .map(|s| Scheme::parse(s).ok_or_else(|| Error::Config(format!("unknown scheme {s:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = &a.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(n) = a.n_theta {
        cfg.set("n_theta", &n.to_string())?;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if a.coarse {
        cfg.coarse = true;
    }
    if let Some(v) = &a.integrator {
        cfg.set("integrator", v)?;
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Run(a) => {
            let cfg = build_config(&a.cfg)?;
            let m = run_experiment(&cfg)?;
            println!("wrote {}", cfg.out_dir.display());
            if let Some(s) = &m.summary {
                for r in &s.results {
                    match &r.holevo {
                        Some(h) => println!(
                            "{:<10} n={:<7} V_H={:.4} ± {:.4}  F={:.4} ± {:.4}",
                            r.scheme.name(),
                            h.n,
                            h.holevo,
                            h.holevo_se,
                            h.efficiency,
                            h.efficiency_se
                        ),
                        None => println!("{:<10} n={:<7} V_H undefined (all estimates null)", r.scheme.name(), r.n_shots),
                    }
                }
                if let (Some(i), Some(se)) =
                    (s.comparisons.adaptive_improvement_over_heterodyne, s.comparisons.adaptive_improvement_se)
                {
                    println!("adaptive improvement over heterodyne: {:.1}% ± {:.1}%", 100.0 * i, 100.0 * se);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepHet(a) => {
            let cfg = build_config(&ConfigArgs { ideal: a.cfg.ideal || a.cfg.config.is_none(), ..a.cfg.clone() })?;
            let points = sweep_heterodyne(&cfg, &a.f_list_hz)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let mut csv = String::from("f_het_hz,n,sharpness,sharpness_se,efficiency,efficiency_se,holevo\n");
            for p in &points {
                csv.push_str(&format!(
                    "{:e},{},{:e},{:e},{:e},{:e},{:e}\n",
                    p.f_het, p.n, p.sharpness, p.sharpness_se, p.efficiency, p.efficiency_se, p.holevo
                ));
                println!("f={:>10.0} Hz  F={:.4} ± {:.4}", p.f_het, p.efficiency, p.efficiency_se);
            }
            let path = cfg.out_dir.join("sweep_het.csv");
            fs::write(&path, csv)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(a) => {
            let mut cfg_args = a.cfg.clone();
            if cfg_args.scheme.is_empty() {
                cfg_args.scheme = vec!["adaptive".into(), "heterodyne".into(), "homodyne".into()];
            }
            let cfg = build_config(&cfg_args)?;
            let check_s: Vec<f64> = a.check_us.iter().map(|t| t * 1e-6).collect();
            let suite = run_validation(&cfg, &cfg.schemes, &check_s, a.shots)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join("validation.json");
            fs::write(&path, serde_json::to_string_pretty(&suite)?)?;
            for s in &suite.schemes {
                println!(
                    "{:<10} {} (worst |z| = {:.2}, flagged bins = {}, combined p = {:.3})",
                    s.scheme.name(),
                    if s.report.all_within { "PASS" } else { "FAIL" },
                    s.report.worst_z(),
                    s.report.flagged.len(),
                    s.report.p_value
                );
            }
            println!(
                "negative control (eta = {}): {} (p = {:.2e})",
                suite.negative_control_eta,
                if suite.negative_control_detected { "detected" } else { "NOT detected" },
                suite.negative_control.report.p_value
            );
            println!("wrote {}", path.display());
            Ok(if suite.all_pass() && suite.negative_control_detected { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Modeshape(a) => {
            let mut cfg = build_config(&a.cfg)?;
            if a.gamma_const.is_some() {
                cfg.gamma_const = a.gamma_const;
            }
            let mode = mode_shape_from_gamma(&cfg.schedule()?);
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join("mode_shape.csv");
            let mut buf = Vec::new();
            mode.write_csv(&mut buf)?;
            fs::write(&path, buf)?;
            println!("emitted = {:.9}, residual = {:.3e}, sum = {:.12}", mode.emitted(), mode.residual, mode.emitted() + mode.residual);
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Export(a) => {
            let figures = if a.figure.eq_ignore_ascii_case("all") {
                Figure::ALL.to_vec()
            } else {
                vec![Figure::parse(&a.figure).ok_or_else(|| Error::Config(format!("unknown figure {:?}", a.figure)))?]
            };
            let out = a.out_dir.unwrap_or_else(|| a.run_dir.join("figures"));
            for f in figures {
                println!("wrote {}", export_figure_data(&a.run_dir, f, &out)?.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::MissingReplayProgram => 2,
        e if e.is_numerical() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
