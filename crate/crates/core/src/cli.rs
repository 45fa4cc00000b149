//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input (flags or definition files),
//! 2 infeasible allocation, 3 I/O or internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::allocator::{explain, AllocationError};
use crate::definitions::{
    parse_cdf, parse_cluster, parse_edf, ClusterSpec, CostWeights, DefinitionError, ExperimentSpec,
    NetworkConfig, ServiceSpec, DEFAULT_POOL_DISCOUNT,
};
use crate::metrics::{
    allocation_frequency, cost_dispersion, emit_report, fairness_series, AllocationHistory,
    MetricsError, ReportFormat,
};
use crate::swarmsim::{
    load_trace_files, measure_scaling, run_experiment, run_iteration, SimConfig, SimError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "swarmflow",
    version,
    about = "Container experiment allocation and swarm simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check definition files (*.cdf.json, *.edf.json, *.cluster.json).
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run one allocation round on freshly sampled workloads.
    Allocate {
        #[arg(long)]
        edf: PathBuf,
        #[arg(long)]
        cluster: PathBuf,
        /// Defaults to the seed in the cluster file.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run repeated allocation rounds and write fairness reports.
    Simulate {
        #[arg(long)]
        edf: PathBuf,
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long)]
        iterations: usize,
        #[arg(long)]
        seed: u64,
        /// Receives allocations.csv, fairness.csv and dispersion.json.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write every iteration's event trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulated start-up time over a workers x services grid.
    Scaling {
        #[arg(long)]
        cluster_template: PathBuf,
        #[arg(long)]
        max_workers: usize,
        #[arg(long)]
        max_services: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Service prototypes; a single 100 MB service with cost 50 otherwise.
        #[arg(long)]
        edf: Option<PathBuf>,
        /// Poll workers one after another instead of concurrently.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Allocation(AllocationError::Solver(_)) | SimError::Kv(_) => {
                CliError::Internal(e.to_string())
            }
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Internal(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => EXIT_INVALID,
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Validate { paths } => validate(&paths, stderr),
        Command::Allocate {
            edf,
            cluster,
            seed,
            out,
        } => {
            let cfg = load_config(&edf, &cluster, seed)?;
            let it = run_iteration(&cfg, 0)?;
            let report = explain(&it.allocation);
            match out {
                Some(path) => write_file(&path, &report)?,
                None => stdout
                    .write_all(report.as_bytes())
                    .map_err(|e| CliError::Internal(e.to_string()))?,
            }
            if it.allocation.feasible {
                Ok(())
            } else {
                Err(CliError::Infeasible(format!(
                    "infeasible allocation, unassigned: {}",
                    it.allocation.unassigned.join(", ")
                )))
            }
        }
        Command::Simulate {
            edf,
            cluster,
            iterations,
            seed,
            out_dir,
            trace,
        } => {
            let mut cfg = load_config(&edf, &cluster, Some(seed))?;
            cfg.iterations = iterations;
            let runs = run_experiment(&cfg)?;
            let history = AllocationHistory::from_iterations(&runs)?;
            fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Internal(format!("{}: {e}", out_dir.display())))?;
            write_file(
                &out_dir.join("allocations.csv"),
                &emit_report(&history, ReportFormat::Csv)?,
            )?;
            write_file(
                &out_dir.join("fairness.csv"),
                &fairness_series(&history)?.to_csv(),
            )?;
            write_file(
                &out_dir.join("dispersion.json"),
                &dispersion_summary(&history)?,
            )?;
            if let Some(path) = trace {
                let text: String = runs.iter().map(|r| r.trace.to_jsonl()).collect();
                write_file(&path, &text)?;
            }
            let infeasible = runs.iter().filter(|r| !r.allocation.feasible).count();
            if infeasible > 0 {
                return Err(CliError::Infeasible(format!(
                    "{infeasible} of {} iterations were infeasible",
                    runs.len()
                )));
            }
            Ok(())
        }
        Command::Scaling {
            cluster_template,
            max_workers,
            max_services,
            seed,
            out,
            edf,
            sequential,
        } => {
            if max_workers == 0 || max_services == 0 {
                return Err(CliError::Invalid(
                    "--max-workers and --max-services must be at least 1".into(),
                ));
            }
            let mut cluster = load_cluster(&cluster_template)?;
            cluster.seed = seed;
            let experiment = match edf {
                Some(path) => load_experiment(&path)?,
                None => ExperimentSpec {
                    name: "scaling".into(),
                    services: vec![ServiceSpec::minimal("svc", "run", 50.0)],
                    dependencies: vec![],
                    network: NetworkConfig::default(),
                    weights: CostWeights::default(),
                    pool_discount: DEFAULT_POOL_DISCOUNT,
                },
            };
            let mut template = SimConfig::new(cluster, experiment);
            template.parallel_cost_calc = !sequential;
            let grid = measure_scaling(1..=max_workers, 1..=max_services, &template)?;
            write_file(&out, &grid.to_csv())
        }
    }
}

#[derive(Serialize)]
struct DispersionSummary {
    iterations: usize,
    assignments: usize,
    mean_cost: f64,
    std_deviation: f64,
    coefficient_of_variation: f64,
    final_jain_cost: f64,
    final_jain_count: f64,
    active_workers: usize,
    assignments_per_worker: BTreeMap<String, u64>,
}

fn dispersion_summary(history: &AllocationHistory) -> Result<String, CliError> {
    let d = cost_dispersion(history)?;
    let series = fairness_series(history)?;
    let freq = allocation_frequency(history)?;
    let summary = DispersionSummary {
        iterations: history.len(),
        assignments: d.count,
        mean_cost: d.mean,
        std_deviation: d.std_deviation,
        coefficient_of_variation: d.coefficient_of_variation,
        final_jain_cost: *series.cost_based.last().expect("non-empty history"),
        final_jain_count: *series.count_based.last().expect("non-empty history"),
        active_workers: freq.active_workers(),
        assignments_per_worker: freq
            .workers
            .iter()
            .map(|w| w.to_string())
            .zip(freq.worker_totals())
            .collect(),
    };
    let mut text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn invalid(path: &Path, e: &DefinitionError) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

/// Every parseable `*.cdf.json` next to `edf`, keyed by service name.
fn sibling_services(edf: &Path) -> BTreeMap<String, ServiceSpec> {
    let dir = edf
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut found = BTreeMap::new();
    let Ok(entries) = fs::read_dir(dir) else {
        return found;
    };
    let mut paths: Vec<PathBuf> = entries.flatten().map(|e| e.path()).collect();
    paths.sort();
    for path in paths {
        if path.to_string_lossy().ends_with(".cdf.json") {
            if let Some(spec) = fs::read_to_string(&path)
                .ok()
                .and_then(|t| parse_cdf(&t).ok())
            {
                found.entry(spec.name.clone()).or_insert(spec);
            }
        }
    }
    found
}

fn load_experiment(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = read(path)?;
    parse_edf(&text, &sibling_services(path)).map_err(|e| invalid(path, &e))
}

fn load_cluster(path: &Path) -> Result<ClusterSpec, CliError> {
    let text = read(path)?;
    let mut cluster = parse_cluster(&text).map_err(|e| invalid(path, &e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_trace_files(&mut cluster, base)?;
    Ok(cluster)
}

fn load_config(edf: &Path, cluster: &Path, seed: Option<u64>) -> Result<SimConfig, CliError> {
    let experiment = load_experiment(edf)?;
    let cluster = load_cluster(cluster)?;
    let mut cfg = SimConfig::new(cluster, experiment);
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Prints one diagnostic line per invalid file; silent when all are valid.
/// A missing or unreadable file aborts with the internal-error code.
fn validate(paths: &[PathBuf], stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut failures = 0;
    for path in paths {
        let text = read(path)?;
        let name = path.to_string_lossy();
        let outcome = if name.ends_with(".cdf.json") {
            parse_cdf(&text).map(drop)
        } else if name.ends_with(".edf.json") {
            parse_edf(&text, &sibling_services(path)).map(drop)
        } else if name.ends_with(".cluster.json") {
            parse_cluster(&text).map(drop)
        } else {
            let _ = writeln!(
                stderr,
                "{name}: unknown definition type (expected .cdf.json, .edf.json or .cluster.json)"
            );
            failures += 1;
            continue;
        };
        if let Err(e) = outcome {
            let _ = writeln!(stderr, "{name}: {e}");
            failures += 1;
        }
    }
    if failures > 0 {
        Err(CliError::Invalid(format!(
            "{failures} of {} files invalid",
            paths.len()
        )))
    } else {
        Ok(())
    }
}
