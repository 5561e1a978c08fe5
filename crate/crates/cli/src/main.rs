mod spec;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use renyigan_lab::fid::{fid_from_samples, FidError};
use renyigan_lab::measures::{MeasureError, Measures, Order};
use renyigan_lab::theorems::{run_suite, SuiteCheck, TheoremError, DEFAULT_TOLERANCE};
use renyigan_lab::trainer::{sweep, train, TrainConfig, TrainError, TrainOutcome};
use thiserror::Error;

/// Caps `--jobs` for `sweep`.
const THREADS_ENV: &str = "RENYIGAN_LAB_THREADS";

const PRESETS: [(&str, &str); 6] = [
    ("lkgan-v1", include_str!("../../../configs/lkgan-v1.toml")),
    ("lkgan-v2", include_str!("../../../configs/lkgan-v2.toml")),
    ("lkgan-v3", include_str!("../../../configs/lkgan-v3.toml")),
    ("renyigan-alpha", include_str!("../../../configs/renyigan-alpha.toml")),
    ("renyigan-sweep", include_str!("../../../configs/renyigan-sweep.toml")),
    ("dcgan-baseline", include_str!("../../../configs/dcgan-baseline.toml")),
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot parse distribution {0}")]
    SpecParse(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Fid(#[from] FidError),
    #[error(transparent)]
    Theorem(#[from] TheoremError),
    #[error(transparent)]
    Train(TrainError),
    #[error("{0}")]
    Diverged(String),
    #[error("{failed} of {total} checks failed")]
    VerificationFailed { failed: usize, total: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ConfigInvalid(msg) => CliError::Config(format!("invalid config: {msg}")),
            other => CliError::Train(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Diverged(_) => 2,
            CliError::VerificationFailed { .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "renyigan-lab", version, about = "LkGAN and RényiGAN numerical lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run from a config file or preset name.
    Train {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the built-in identity and limit checks.
    Verify {
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Run a single named check.
        #[arg(long)]
        only: Option<String>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one information measure between two distribution specs.
    Measure {
        measure: MeasureName,
        p: String,
        q: String,
        #[arg(long)]
        order: Option<f64>,
    },
    /// Fréchet distance between two CSV sample files (one sample per row).
    Fid { a: PathBuf, b: PathBuf },
    /// Train one config over several seeds.
    Sweep {
        config: String,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureName {
    Kl,
    ShannonCrossEntropy,
    RenyiDivergence,
    RenyiCrossEntropy,
    JensenShannon,
    JensenRenyi,
    PearsonVajda,
}

/// Rounds to 12 significant digits.
fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("valid float");
    format!("{rounded:?}")
}

fn load_config(name_or_path: &str) -> Result<TrainConfig, CliError> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        return Ok(TrainConfig::from_path(path)?);
    }
    match PRESETS.iter().find(|(n, _)| *n == name_or_path) {
        Some((_, text)) => Ok(TrainConfig::from_toml_str(text)?),
        None => Err(CliError::Config(format!(
            "{name_or_path} is neither a readable file nor a preset ({})",
            PRESETS.map(|(n, _)| n).join(", ")
        ))),
    }
}

fn apply_overrides(config: &mut TrainConfig, seed: Option<u64>, epochs: Option<usize>) -> Result<(), CliError> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(e) = epochs {
        config.epochs = e;
    }
    Ok(config.validate()?)
}

fn summary(o: &TrainOutcome) -> String {
    let r = &o.record;
    let mut s = String::new();
    let _ = writeln!(s, "epochs completed: {}", r.rows.len());
    if let (Some(first), Some(last)) = (r.rows.first(), r.rows.last()) {
        let _ = writeln!(s, "fid: epoch 1 {}, final {}", sig12(first.fid), sig12(last.fid));
    }
    if let Some(best) = r.best_fid_row() {
        let _ = writeln!(s, "min fid: {} at epoch {}", sig12(best.fid), best.epoch);
    }
    if let Some(c) = r.final_coverage {
        let _ = writeln!(
            s,
            "modes hit: {}, high-quality fraction: {}",
            c.modes_hit,
            sig12(c.high_quality_fraction)
        );
    }
    s
}

fn cmd_train(config: &str, seed: Option<u64>, epochs: Option<usize>, out_dir: &Path) -> Result<(), CliError> {
    let mut c = load_config(config)?;
    apply_overrides(&mut c, seed, epochs)?;
    match train(&c) {
        Ok(o) => {
            o.write_to(out_dir)?;
            print!("{}", summary(&o));
            println!("artifacts: {}", out_dir.display());
            Ok(())
        }
        Err(TrainError::NumericalDivergence { partial, .. }) => {
            partial.write_to(out_dir)?;
            print!("{}", summary(&partial));
            Err(CliError::Diverged(
                partial.record.divergence.clone().unwrap_or_default(),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn suite_csv(checks: &[SuiteCheck]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "cases", "lhs", "rhs", "gap", "tolerance", "passed"])?;
    for c in checks {
        w.write_record([
            c.name.to_string(),
            c.cases.to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.gap.to_string(),
            c.tolerance.to_string(),
            c.passed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_verify(tolerance: f64, only: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let checks = run_suite(tolerance, only)?;
    println!(
        "{:<20} {:>6} {:>12} {:>10}  result",
        "check", "cases", "gap", "tolerance"
    );
    for c in &checks {
        println!(
            "{:<20} {:>6} {:>12.3e} {:>10.1e}  {}",
            c.name,
            c.cases,
            c.gap,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(path) = out {
        fs::write(path, suite_csv(&checks)?)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::VerificationFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}

fn cmd_measure(name: MeasureName, p: &str, q: &str, order: Option<f64>) -> Result<(), CliError> {
    let (p, q) = (spec::parse_distribution(p)?, spec::parse_distribution(q)?);
    let m = Measures::default();
    let need = |order: Option<f64>| order.ok_or_else(|| CliError::Config("this measure needs --order".into()));
    let v = match name {
        MeasureName::Kl => m.kl_divergence(&p, &q)?,
        MeasureName::ShannonCrossEntropy => m.shannon_cross_entropy(&p, &q)?,
        MeasureName::JensenShannon => m.jensen_shannon(&p, &q)?,
        MeasureName::RenyiDivergence => m.renyi_divergence(&p, &q, Order::renyi(need(order)?)?)?,
        MeasureName::RenyiCrossEntropy => m.renyi_cross_entropy(&p, &q, Order::renyi(need(order)?)?)?,
        MeasureName::JensenRenyi => m.jensen_renyi(&p, &q, Order::renyi(need(order)?)?)?,
        MeasureName::PearsonVajda => m.pearson_vajda(&p, &q, Order::vajda(need(order)?)?)?,
    };
    println!("{}", sig12(v));
    Ok(())
}

fn cmd_fid(a: &Path, b: &Path) -> Result<(), CliError> {
    let fid = fid_from_samples(&spec::read_samples(a)?, &spec::read_samples(b)?)?;
    println!("{}", sig12(fid.value));
    if fid.clipped {
        eprintln!("warning: a negative raw value was clipped to 0");
    }
    Ok(())
}

/// `requested` limited by the thread-cap environment variable, if set.
fn effective_jobs(requested: usize, cap: Option<&str>) -> Result<usize, CliError> {
    let requested = requested.max(1);
    match cap {
        None => Ok(requested),
        Some(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{THREADS_ENV} = {v:?} is not a thread count")))?;
            Ok(requested.min(cap.max(1)))
        }
    }
}

fn cmd_sweep(config: &str, seeds: &[u64], jobs: usize, epochs: Option<usize>, out_dir: &Path) -> Result<(), CliError> {
    let mut c = load_config(config)?;
    apply_overrides(&mut c, None, epochs)?;
    let jobs = effective_jobs(jobs, std::env::var(THREADS_ENV).ok().as_deref())?;
    let results = sweep(&c, seeds, jobs);

    fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "epochs_completed",
        "final_fid",
        "min_fid",
        "min_fid_epoch",
        "modes_hit",
        "high_quality_fraction",
        "diverged",
    ])?;
    let mut diverged = Vec::new();
    println!(
        "{:>12} {:>8} {:>12} {:>12} {:>6}",
        "seed", "epochs", "final fid", "min fid", "modes"
    );
    for (&seed, r) in seeds.iter().zip(results) {
        let (outcome, did_diverge) = match r {
            Ok(o) => (o, false),
            Err(TrainError::NumericalDivergence { partial, .. }) => (*partial, true),
            Err(e) => return Err(e.into()),
        };
        outcome.write_to(&out_dir.join(format!("seed-{seed}")))?;
        let rec = &outcome.record;
        let last = rec.rows.last();
        let best = rec.best_fid_row();
        let cov = rec.final_coverage;
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            seed.to_string(),
            rec.rows.len().to_string(),
            opt(last.map(|r| r.fid.to_string())),
            opt(best.map(|r| r.fid.to_string())),
            opt(best.map(|r| r.epoch.to_string())),
            opt(cov.map(|c| c.modes_hit.to_string())),
            opt(cov.map(|c| c.high_quality_fraction.to_string())),
            did_diverge.to_string(),
        ])?;
        println!(
            "{:>12} {:>8} {:>12} {:>12} {:>6}{}",
            seed,
            rec.rows.len(),
            opt(last.map(|r| sig12(r.fid))),
            opt(best.map(|r| sig12(r.fid))),
            opt(cov.map(|c| c.modes_hit.to_string())),
            if did_diverge { "  diverged" } else { "" }
        );
        if did_diverge {
            diverged.push(seed.to_string());
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    fs::write(out_dir.join("summary.csv"), bytes)?;
    if !diverged.is_empty() {
        return Err(CliError::Diverged(format!("seeds {} diverged", diverged.join(", "))));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            seed,
            epochs,
            out_dir,
        } => cmd_train(&config, seed, epochs, &out_dir),
        Command::Verify { tolerance, only, out } => cmd_verify(tolerance, only.as_deref(), out.as_deref()),
        Command::Measure { measure, p, q, order } => cmd_measure(measure, &p, &q, order),
        Command::Fid { a, b } => cmd_fid(&a, &b),
        Command::Sweep {
            config,
            seeds,
            jobs,
            epochs,
            out_dir,
        } => cmd_sweep(&config, &seeds, jobs, epochs, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
