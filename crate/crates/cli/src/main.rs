//! `condist`: run estimators, oracle checks and Monte Carlo experiments
//! from JSON configs.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
//! numerical error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condist_core::fixtures::OracleFixtures;
use condist_core::kernels::check_against_quadrature;
use condist_core::Estimator;
use condist_simulate::{parse_and_validate, run, run_estimate, ExperimentConfig, ExperimentKind, SimError, SimulationReport};

#[derive(Parser)]
#[command(name = "condist", version, about = "Local linear conditional CDF estimation and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit both estimators on one sample and write the surfaces.
    Estimate(RunArgs),
    /// Compare the exact bias with its leading-term expansion (no sampling).
    Bias(RunArgs),
    /// Uniform error rate across the n schedule.
    Rates(RunArgs),
    /// Remainder of the linear representation across the n schedule.
    Alr(RunArgs),
    /// Modulus of continuity of the centred process.
    Equicont(RunArgs),
    /// Normal approximation of the integrated estimate.
    Clt(RunArgs),
    /// Print the kernel moment table checked against quadrature.
    KernelsCheck,
    /// Recompute the oracle fixtures and compare with the checked-in file.
    Fixtures(FixtureArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Force R = 5 replications.
    #[arg(long)]
    smoke: bool,
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory (falls back to $CONDIST_OUT, then `condist-out`).
    #[arg(long, env = "CONDIST_OUT")]
    out: Option<PathBuf>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_threads)]
    threads: usize,
}

#[derive(Args)]
struct FixtureArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// `auto` maps to 0, which lets rayon pick.
fn parse_threads(s: &str) -> Result<usize, String> {
    if s == "auto" {
        return Ok(0);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    let (kind, args) = match cmd {
        Command::KernelsCheck => return kernels_check(),
        Command::Fixtures(a) => return fixtures(&a.common),
        Command::Estimate(a) => (ExperimentKind::Estimate, a),
        Command::Bias(a) => (ExperimentKind::Bias, a),
        Command::Rates(a) => (ExperimentKind::Rates, a),
        Command::Alr(a) => (ExperimentKind::Alr, a),
        Command::Equicont(a) => (ExperimentKind::Equicont, a),
        Command::Clt(a) => (ExperimentKind::Clt, a),
    };
    let cfg = load_config(&args, kind)?;
    let out = out_dir(&args.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.common.threads)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    pool.install(|| run_kind(kind, &cfg, &out))
}

fn load_config(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let (mut cfg, warnings) = parse_and_validate(&text, kind)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.smoke {
        cfg.replications = 5;
    }
    for w in warnings {
        if args.smoke && w.starts_with("replications:") {
            continue;
        }
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf, Failure> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("condist-out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_report(report: &SimulationReport, out: &Path) -> Result<PathBuf, Failure> {
    let base = out.join(&report.experiment);
    let json = base.with_extension("json");
    fs::write(&json, report.to_json())?;
    write_file(&base.with_extension("csv"), |w| report.write_csv(w))?;
    if report.experiment.starts_with("rates") {
        write_file(&out.join(format!("{}_plot.csv", report.experiment)), |w| report.write_plot_csv(w))?;
    }
    Ok(json)
}

fn summary_line(report: &SimulationReport) -> String {
    let fields: Vec<String> = report.summary.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
    format!("{}: {}", report.experiment, fields.join(" "))
}

fn run_kind(kind: ExperimentKind, cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    if kind == ExperimentKind::Estimate {
        let est = run_estimate(cfg)?;
        write_file(&out.join("estimate_sample.csv"), |w| est.sample.write_csv(w))?;
        for (e, surface) in &est.surfaces {
            let name = match e {
                Estimator::Smoothed => "smoothed",
                Estimator::Unsmoothed => "unsmoothed",
            };
            write_file(&out.join(format!("estimate_surface_{name}.csv")), |w| surface.write_csv(w))?;
        }
        let path = write_report(&est.report, out)?;
        let fields: Vec<String> = est
            .report
            .aggregates
            .iter()
            .map(|a| format!("{} sup_error={:.4}", a.key(), a.stat("sup_error").unwrap_or(f64::NAN)))
            .collect();
        println!("estimate: {} -> {}", fields.join(", "), path.display());
        return Ok(());
    }
    for report in run(kind, cfg)? {
        let path = write_report(&report, out)?;
        println!("{} -> {}", summary_line(&report), path.display());
    }
    Ok(())
}

fn kernels_check() -> Result<(), Failure> {
    let checks = check_against_quadrature().map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{:<13} {:>10} {:>12} {:>12} {:>10}", "kernel", "kappa2", "mass-1", "m1", "max_err");
    let mut worst = 0.0_f64;
    for c in &checks {
        println!(
            "{:<13} {:>10.6} {:>12.3e} {:>12.3e} {:>10.3e}",
            c.kernel.name(),
            c.moment2,
            c.mass - 1.0,
            c.moment1,
            c.max_err()
        );
        worst = worst.max(c.max_err());
    }
    if worst > 1e-10 {
        return Err(Failure::Runtime(format!("closed forms disagree with quadrature by {worst:.3e}")));
    }
    Ok(())
}

fn fixtures(common: &CommonArgs) -> Result<(), Failure> {
    let out = out_dir(common)?;
    let fresh = condist_core::fixtures::generate().map_err(|e| Failure::Runtime(e.to_string()))?;
    let path = out.join("oracle.json");
    fs::write(&path, fresh.to_json())?;
    let checked = OracleFixtures::checked_in().map_err(|e| Failure::Runtime(format!("checked-in fixtures do not parse: {e}")))?;
    let bad = checked.mismatches(&fresh);
    for m in &bad {
        eprintln!("mismatch: {m}");
    }
    let total = fresh.beta_bar.len() + fresh.theta.len() + fresh.clt_variance.len() + fresh.eigen_band.len();
    println!("fixtures: {total} entries, {} mismatches against checked-in values -> {}", bad.len(), path.display());
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} fixture values moved beyond tolerance", bad.len())))
    }
}
