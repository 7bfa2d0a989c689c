//! Experiment runner for the branching random walk laboratory.
//!
//! [`run_file`] reads an experiment file, runs it on a dedicated thread pool
//! and writes `<id>.csv`, `<id>.json` and, on request, `<id>.trace.ndjson`
//! into the output directory. Replica seeds depend only on the master seed,
//! the parameter cell and the replica index, so the CSV is identical for
//! any number of workers.

pub mod config;
pub mod plot;
pub mod run;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub use config::{ConfigError, ExperimentSpec, Kind, Plan};
pub use run::{execute, Outcome};
pub use table::Table;

/// Version of the `<id>.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "BRWLAB_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid experiment: {0}")]
    Config(#[from] ConfigError),
    #[error("experiment rejected: {0}")]
    Experiment(#[from] brwlab_core::BrwError),
    #[error("{replicas} replica(s) hit a resource cap; partial results written to {}", csv.display())]
    CapExhausted { replicas: u64, csv: PathBuf },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Plot(#[from] plot::UnknownLayout),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CapExhausted { .. } | CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Experiment(_) | CliError::Plot(_) => 2,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn record(&self) -> Value {
        let (kind, field) = match self {
            CliError::Config(e) => ("config", Some(e.field.clone())),
            CliError::Experiment(_) => ("config", None),
            CliError::CapExhausted { .. } => ("cap_exhausted", None),
            CliError::Io { .. } => ("io", None),
            CliError::Plot(_) => ("layout", None),
        };
        json!({ "error": kind, "field": field, "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses [`WORKERS_ENV`] or all cores.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace: bool,
}

/// Worker count from the flag, then the environment, then the machine.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize, ConfigError> {
    if let Some(w) = flag {
        return if w == 0 { Err(ConfigError::new("--workers", "must be at least 1")) } else { Ok(w) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(ConfigError::new(WORKERS_ENV, format!("`{s}` is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs a parsed experiment on a pool of `workers` threads.
pub fn run_plan(plan: &Plan, workers: usize, trace: bool) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io { path: PathBuf::new(), message: format!("thread pool: {e}") })?;
    Ok(pool.install(|| execute(plan, trace))?)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub id: String,
    pub kind: Kind,
    pub seed: u64,
    pub replicas: u64,
    pub status: &'static str,
    pub caps_triggered: u64,
    pub columns: Vec<String>,
    pub rows: usize,
    pub csv: String,
    pub summary: Value,
    /// Excluded from the determinism contract.
    pub wall_time_seconds: f64,
    pub workers: usize,
}

/// Paths written by a run.
#[derive(Clone, Debug)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub trace: Option<PathBuf>,
    pub result: RunResult,
}

pub fn load(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    Ok(ExperimentSpec::parse(&text)?)
}

/// Parses, runs and writes one experiment file. A run that hit a cap still
/// writes its files and then returns [`CliError::CapExhausted`].
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<Written, CliError> {
    let spec = load(path)?;
    let plan = spec.resolve()?;
    let workers = resolve_workers(opts.workers)?;
    let id = spec.id.clone().unwrap_or_else(|| path.file_stem().map_or("experiment".into(), |s| s.to_string_lossy().into_owned()));
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("results"));

    let started = Instant::now();
    let outcome = run_plan(&plan, workers, opts.trace)?;
    let wall = started.elapsed().as_secs_f64();

    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let csv = out.join(format!("{id}.csv"));
    fs::write(&csv, outcome.table.to_csv()).map_err(io_err(&csv))?;
    let trace = if opts.trace {
        let p = out.join(format!("{id}.trace.ndjson"));
        let mut f = std::io::BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
        for rec in &outcome.traces {
            serde_json::to_writer(&mut f, rec).map_err(|e| CliError::Io { path: p.clone(), message: e.to_string() })?;
            f.write_all(b"\n").map_err(io_err(&p))?;
        }
        f.flush().map_err(io_err(&p))?;
        Some(p)
    } else {
        None
    };
    let result = RunResult {
        schema_version: SCHEMA_VERSION,
        id: id.clone(),
        kind: plan.kind,
        seed: plan.seed,
        replicas: plan.replicas,
        status: if outcome.caps_triggered > 0 { "cap_exhausted" } else { "ok" },
        caps_triggered: outcome.caps_triggered,
        columns: outcome.table.header.clone(),
        rows: outcome.table.rows.len(),
        csv: format!("{id}.csv"),
        summary: outcome.summary,
        wall_time_seconds: wall,
        workers,
    };
    let json_path = out.join(format!("{id}.json"));
    let body = serde_json::to_vec_pretty(&result).expect("result serialises");
    fs::write(&json_path, body).map_err(io_err(&json_path))?;
    if outcome.caps_triggered > 0 {
        return Err(CliError::CapExhausted { replicas: outcome.caps_triggered, csv });
    }
    Ok(Written { csv, json: json_path, trace, result })
}

/// Writes the long-format plot table for `csv` next to it, or to `out`.
pub fn plotdata_file(csv: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let bytes = fs::read(csv).map_err(io_err(csv))?;
    let t = Table::from_csv(&bytes).map_err(|e| CliError::Io { path: csv.to_path_buf(), message: e.to_string() })?;
    let plot = plot::plot_data(&t)?;
    let dest = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let stem = csv.file_stem().map_or("result".into(), |s| s.to_string_lossy().into_owned());
        csv.with_file_name(format!("{stem}.plot.csv"))
    });
    fs::write(&dest, plot.to_csv()).map_err(io_err(&dest))?;
    Ok(dest)
}
