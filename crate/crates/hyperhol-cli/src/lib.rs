//! Configuration-driven experiment runner for the `hyperhol` library.
//!
//! One experiment runs per invocation.  Its report is a versioned JSON file
//! `<experiment>.json` whose bytes depend only on the configuration and the
//! seed; the wall-clock timestamp goes to a separate
//! `<experiment>.meta.json`.  Exit status: 0 when every check passes, 2 when
//! a check fails, 1 on configuration or module errors, which are recorded
//! in the report as structured entries.

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod oracle;
pub mod report;

use clap::{Parser, Subcommand, ValueEnum};
use config::{ExperimentConfig, Overrides};
use hyperhol::error::{HyperholError, Result};
use report::{error_kind, ErrorEntry, Report, EXIT_ERROR, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "HYPERHOL_THREADS";

/// The experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Kähler, Kodaira and quaternionic operator identities.
    Identities,
    /// Curvature diagnostics of a connection.
    Analyze,
    /// Pointwise Bogomolov–Gieseker inequality.
    Bg,
    /// Kuranishi deformation series.
    Kuranishi,
    /// Quadratic cone of the Yoneda pairing.
    Cone,
    /// `sl(2)` action on harmonic forms.
    Sl2,
    /// Hyperkähler structure of the tangent space.
    Tangent,
    /// Yang–Mills gradient flow.
    Flow,
    /// `(p,q)` dimension table of harmonic forms.
    PqTable,
}

impl Experiment {
    /// Every experiment in catalog order.
    pub const ALL: [Experiment; 9] = [
        Experiment::Identities,
        Experiment::Analyze,
        Experiment::Bg,
        Experiment::Kuranishi,
        Experiment::Cone,
        Experiment::Sl2,
        Experiment::Tangent,
        Experiment::Flow,
        Experiment::PqTable,
    ];

    /// Kebab-case name, as used for subcommands and report files.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Analyze => "analyze",
            Experiment::Bg => "bg",
            Experiment::Kuranishi => "kuranishi",
            Experiment::Cone => "cone",
            Experiment::Sl2 => "sl2",
            Experiment::Tangent => "tangent",
            Experiment::Flow => "flow",
            Experiment::PqTable => "pq-table",
        }
    }
}

/// Command line.
#[derive(Debug, Parser)]
#[command(name = "hyperhol", version, about = "Quaternionic Hodge theory experiments on the flat 4-torus")]
pub struct Cli {
    /// Experiment to run.
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration layered over the experiment's defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default `reports`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Allow products to be truncated at the working cutoff.
    #[arg(long, global = true)]
    pub allow_truncation: bool,
    /// Multiplier applied to every upper-bound tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol_scale: Option<f64>,
}

/// Subcommands: one per experiment plus the check catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Kähler, Kodaira and quaternionic operator identities.
    Identities,
    /// Curvature diagnostics of a connection.
    Analyze,
    /// Pointwise Bogomolov–Gieseker inequality on random curvature samples.
    Bg,
    /// Kuranishi deformation series for exact inputs.
    Kuranishi,
    /// Quadratic cone membership against the commutator oracle.
    Cone,
    /// `sl(2)` weights and Lefschetz map on harmonic forms.
    Sl2,
    /// Hyperkähler structure of the tangent space of the moduli.
    Tangent,
    /// Yang–Mills flow from perturbations of the flat connection.
    Flow,
    /// `(p,q)` dimension table of harmonic forms.
    PqTable,
    /// Print every named check with its statement and tolerance.
    ListChecks,
}

impl Command {
    /// The experiment of a subcommand (`None` for `list-checks`).
    pub fn experiment(self) -> Option<Experiment> {
        Some(match self {
            Command::Identities => Experiment::Identities,
            Command::Analyze => Experiment::Analyze,
            Command::Bg => Experiment::Bg,
            Command::Kuranishi => Experiment::Kuranishi,
            Command::Cone => Experiment::Cone,
            Command::Sl2 => Experiment::Sl2,
            Command::Tangent => Experiment::Tangent,
            Command::Flow => Experiment::Flow,
            Command::PqTable => Experiment::PqTable,
            Command::ListChecks => return None,
        })
    }
}

/// A finished run: the report and the extra files to write next to it.
#[derive(Debug, Clone)]
pub struct Run {
    /// The report.
    pub report: Report,
    /// `(file name, contents)` of CSV tables and exported connections.
    pub files: Vec<(String, String)>,
    /// Output directory.
    pub out_dir: PathBuf,
}

/// Loads the configuration of `experiment` (defaults, then the JSON text if
/// any, then the overrides).
pub fn load_config(experiment: Experiment, text: Option<&str>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = match text {
        Some(t) => ExperimentConfig::from_json(experiment, t)?,
        None => ExperimentConfig::default_for(experiment),
    };
    overrides.apply(&mut config)?;
    Ok(config)
}

/// Runs an experiment without touching the file system (apart from a
/// connection file named in the configuration).  Errors become structured
/// report entries.
pub fn execute(experiment: Experiment, text: Option<&str>, overrides: &Overrides) -> Run {
    let config = match load_config(experiment, text, overrides).and_then(|c| thread_count().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            return failed_run(experiment, overrides, ErrorEntry { kind: error_kind(&e), message: e.to_string() });
        }
    };
    let mut report = empty_report(experiment, config.seed);
    let out_dir = PathBuf::from(&config.outputs.dir);
    let csv = config.outputs.csv;
    let outcome = experiments::run(&config);
    report.config = Some(config);
    match outcome {
        Ok(o) => {
            report.checks = o.checks;
            report.data = o.data;
            let files = o.files.into_iter().filter(|(name, _)| csv || !name.ends_with(".csv")).collect();
            Run { report, files, out_dir }
        }
        Err(e) => {
            report.error = Some(ErrorEntry { kind: error_kind(&e), message: e.to_string() });
            Run { report, files: Vec::new(), out_dir }
        }
    }
}

fn empty_report(experiment: Experiment, seed: u64) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.name().into(),
        seed,
        config: None,
        checks: Vec::new(),
        data: serde_json::Value::Null,
        error: None,
    }
}

/// A run that stopped before the experiment started.
fn failed_run(experiment: Experiment, overrides: &Overrides, error: ErrorEntry) -> Run {
    let mut report = empty_report(experiment, overrides.seed.unwrap_or(0));
    report.error = Some(error);
    let out_dir = PathBuf::from(overrides.out.clone().unwrap_or_else(|| "reports".into()));
    Run { report, files: Vec::new(), out_dir }
}

/// Worker-thread count from [`THREADS_ENV`] (default 1).  The library's
/// computations are sequential; the value is validated and recorded.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HyperholError::ConfigInvalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Writes `<experiment>.json`, `<experiment>.meta.json` and the extra files.
pub fn write_outputs(run: &Run) -> std::io::Result<Vec<PathBuf>> {
    let dir = &run.out_dir;
    std::fs::create_dir_all(dir)?;
    let name = &run.report.experiment;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, contents: &str| -> std::io::Result<()> {
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    write(dir.join(format!("{name}.json")), &run.report.to_json())?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "experiment": name,
        "timestamp_unix": stamp,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": thread_count().unwrap_or(1),
    });
    write(dir.join(format!("{name}.meta.json")), &format!("{}\n", serde_json::to_string_pretty(&meta).expect("meta serializes")))?;
    for (file, contents) in &run.files {
        write(dir.join(file), contents)?;
    }
    Ok(written)
}

fn summary(run: &Run) -> String {
    let mut s = String::new();
    for c in &run.report.checks {
        let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into());
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{verdict} {} value={value} tolerance={:e}\n", c.name, c.tolerance));
    }
    if let Some(e) = &run.report.error {
        s.push_str(&format!("ERROR {}: {}\n", e.kind, e.message));
    }
    s
}

fn read_config(path: &Path) -> std::result::Result<String, ErrorEntry> {
    std::fs::read_to_string(path).map_err(|e| ErrorEntry {
        kind: "ConfigInvalid".into(),
        message: format!("invalid configuration: cannot read {}: {e}", path.display()),
    })
}

/// Entry point of the binary; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let Some(experiment) = cli.command.experiment() else {
        print!("{}", catalog::render());
        return 0;
    };
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        allow_truncation: cli.allow_truncation,
        tol_scale: cli.tol_scale,
    };
    let text = match cli.config.as_deref().map(read_config).transpose() {
        Ok(t) => t,
        Err(entry) => return finish(&failed_run(experiment, &overrides, entry)),
    };
    let run = execute(experiment, text.as_deref(), &overrides);
    finish(&run)
}

fn finish(run: &Run) -> i32 {
    print!("{}", summary(run));
    match write_outputs(run) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            run.report.exit_code()
        }
        Err(e) => {
            eprintln!("cannot write reports to {}: {e}", run.out_dir.display());
            EXIT_ERROR
        }
    }
}
