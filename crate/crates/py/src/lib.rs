//! Python bindings: definition parsing, cost functions, allocation, the swarm
//! simulator and fairness metrics.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use swarmflow::allocator::{self, AllocationResult, AllocatorOptions, CostTable};
use swarmflow::costing::{self, CapabilityMatrix, DependencyMatrix};
use swarmflow::definitions::{self, ClusterSpec, CostWeights, ExperimentSpec, ServiceSpec};
use swarmflow::mcmf::{self, Algorithm, FlowNetwork};
use swarmflow::metrics::{self, AllocationHistory, ReportFormat};
use swarmflow::model::{AgentId, WorkloadSample};
use swarmflow::swarmsim::{self, SimConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    match name {
        "ssp" => Ok(Algorithm::SuccessiveShortestPath),
        "cost_scaling" => Ok(Algorithm::CostScaling),
        other => Err(value_error(format!(
            "unknown algorithm `{other}`, expected `ssp` or `cost_scaling`"
        ))),
    }
}

fn sim_error(e: swarmsim::SimError) -> PyErr {
    match e {
        swarmsim::SimError::Kv(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_error(e),
    }
}

/// A container definition.
#[pyclass(name = "Service", frozen, from_py_object)]
#[derive(Clone)]
struct PyService {
    inner: ServiceSpec,
}

#[pymethods]
impl PyService {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        definitions::parse_cdf(text)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    fn to_json(&self) -> String {
        definitions::serialize_cdf(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn predefined_cost(&self) -> f64 {
        self.inner.predefined_cost
    }

    #[getter]
    fn required_capabilities(&self) -> Vec<String> {
        self.inner.required_capabilities.iter().cloned().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Service({:?}, predefined_cost={})",
            self.inner.name, self.inner.predefined_cost
        )
    }
}

/// An experiment definition with every service reference resolved.
#[pyclass(name = "Experiment", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExperiment {
    inner: ExperimentSpec,
}

#[pymethods]
impl PyExperiment {
    /// Parses an EDF. Named service references are resolved against
    /// `services`.
    #[staticmethod]
    #[pyo3(signature = (text, services = Vec::new()))]
    fn from_json(text: &str, services: Vec<PyService>) -> PyResult<Self> {
        let resolver: BTreeMap<String, ServiceSpec> = services
            .into_iter()
            .map(|s| (s.inner.name.clone(), s.inner))
            .collect();
        definitions::parse_edf(text, &resolver)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    fn to_json(&self) -> String {
        definitions::serialize_edf(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn services(&self) -> Vec<PyService> {
        self.inner
            .services
            .iter()
            .map(|s| PyService { inner: s.clone() })
            .collect()
    }

    #[getter]
    fn dependencies(&self) -> Vec<(String, String)> {
        self.inner.dependencies.clone()
    }
}

/// A worker roster with hardware profiles and workload generators.
#[pyclass(name = "Cluster", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCluster {
    inner: ClusterSpec,
}

#[pymethods]
impl PyCluster {
    /// Parses a cluster file. Trace workloads given by `file` are read
    /// relative to `base_dir`.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir = None))]
    fn from_json(text: &str, base_dir: Option<std::path::PathBuf>) -> PyResult<Self> {
        let mut inner = definitions::parse_cluster(text).map_err(value_error)?;
        let base = base_dir.unwrap_or_else(|| ".".into());
        swarmsim::load_trace_files(&mut inner, &base).map_err(sim_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn uniform(workers: usize, seed: u64) -> Self {
        Self {
            inner: swarmsim::uniform_cluster(
                workers,
                seed,
                definitions::WorkloadGenerator::balanced(),
            ),
        }
    }

    fn to_json(&self) -> String {
        definitions::serialize_cluster(&self.inner)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn workers(&self) -> Vec<String> {
        self.inner
            .workers
            .iter()
            .map(|w| w.id.to_string())
            .collect()
    }
}

/// Outcome of one allocation round.
#[pyclass(name = "Allocation", frozen)]
struct PyAllocation {
    inner: AllocationResult,
}

#[pymethods]
impl PyAllocation {
    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }

    #[getter]
    fn total_cost(&self) -> f64 {
        self.inner.total_cost
    }

    #[getter]
    fn total_cost_scaled(&self) -> i64 {
        self.inner.total_cost_scaled
    }

    /// `(service, worker, unit, cost)` per placed service.
    #[getter]
    fn assignments(&self) -> Vec<(String, String, String, f64)> {
        self.inner
            .assignments
            .iter()
            .map(|a| {
                (
                    a.service.clone(),
                    a.worker.to_string(),
                    a.unit.clone(),
                    a.cost,
                )
            })
            .collect()
    }

    #[getter]
    fn unassigned(&self) -> Vec<String> {
        self.inner.unassigned.clone()
    }

    fn explain(&self) -> String {
        allocator::explain(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Allocation(feasible={}, assigned={}, total_cost={:.6})",
            self.inner.feasible,
            self.inner.assignments.len(),
            self.inner.total_cost
        )
    }
}

/// Reports of a simulated experiment.
#[pyclass(name = "Simulation", frozen)]
struct PySimulation {
    history: AllocationHistory,
    traces: Vec<String>,
    elapsed_ms: Vec<u64>,
}

#[pymethods]
impl PySimulation {
    #[getter]
    fn allocations(&self) -> Vec<PyAllocation> {
        self.history
            .iterations
            .iter()
            .map(|r| PyAllocation { inner: r.clone() })
            .collect()
    }

    #[getter]
    fn elapsed_ms(&self) -> Vec<u64> {
        self.elapsed_ms.clone()
    }

    /// Cumulative-cost Jain's index after each iteration.
    fn fairness(&self) -> PyResult<Vec<f64>> {
        Ok(metrics::fairness_series(&self.history)
            .map_err(value_error)?
            .cost_based)
    }

    fn fairness_by_count(&self) -> PyResult<Vec<f64>> {
        Ok(metrics::fairness_series(&self.history)
            .map_err(value_error)?
            .count_based)
    }

    /// `{"mean", "std_deviation", "coefficient_of_variation"}` over all
    /// assignment costs.
    fn dispersion(&self) -> PyResult<BTreeMap<String, f64>> {
        let d = metrics::cost_dispersion(&self.history).map_err(value_error)?;
        Ok(BTreeMap::from([
            ("mean".to_string(), d.mean),
            ("std_deviation".to_string(), d.std_deviation),
            (
                "coefficient_of_variation".to_string(),
                d.coefficient_of_variation,
            ),
        ]))
    }

    /// Worker id to per-service assignment counts, in service roster order.
    fn frequency(&self) -> PyResult<BTreeMap<String, Vec<u64>>> {
        let f = metrics::allocation_frequency(&self.history).map_err(value_error)?;
        Ok(f.workers
            .iter()
            .map(|w| w.to_string())
            .zip(f.counts)
            .collect())
    }

    #[pyo3(signature = (format = "csv"))]
    fn report(&self, format: &str) -> PyResult<String> {
        let format = match format {
            "csv" => ReportFormat::Csv,
            "json" => ReportFormat::Json,
            other => return Err(value_error(format!("unknown format `{other}`"))),
        };
        metrics::emit_report(&self.history, format).map_err(value_error)
    }

    /// Event traces of every iteration as JSON lines.
    fn trace_jsonl(&self) -> String {
        self.traces.concat()
    }
}

#[pyfunction]
fn cpu_cost(alpha: f64, beta: f64) -> PyResult<f64> {
    costing::cpu_cost(alpha, beta).map_err(value_error)
}

#[pyfunction]
fn vram_cost(alpha: f64, beta: f64) -> PyResult<f64> {
    costing::vram_cost(alpha, beta).map_err(value_error)
}

#[pyfunction]
fn swap_cost(alpha: f64, beta: f64) -> PyResult<f64> {
    costing::swap_cost(alpha, beta).map_err(value_error)
}

#[pyfunction]
fn bandwidth_cost(alpha: f64, beta: f64) -> PyResult<f64> {
    costing::bandwidth_cost(alpha, beta).map_err(value_error)
}

/// Weighted cost of a service with cost `alpha` on a worker reporting
/// `beta = (cpu, vram, swap, bandwidth)`.
#[pyfunction]
#[pyo3(signature = (alpha, beta, weights = (0.25, 0.25, 0.25, 0.25)))]
fn edge_cost(
    alpha: f64,
    beta: (f64, f64, f64, f64),
    weights: (f64, f64, f64, f64),
) -> PyResult<f64> {
    let sample = WorkloadSample::new(beta.0, beta.1, beta.2, beta.3).map_err(value_error)?;
    let weights =
        CostWeights::new(weights.0, weights.1, weights.2, weights.3).map_err(value_error)?;
    costing::edge_cost(alpha, &sample, &weights).map_err(value_error)
}

#[pyfunction]
fn jains_index(values: Vec<f64>) -> PyResult<f64> {
    metrics::jains_index(&values).map_err(value_error)
}

/// Allocates services to workers from a cost matrix (`costs[worker][service]`).
/// `feasible` masks worker/service pairs; `dependencies` are service index
/// pairs that may be pooled with cost multiplied by `discount`.
#[pyfunction]
#[pyo3(signature = (costs, feasible = None, dependencies = Vec::new(), discount = 0.9, algorithm = "ssp"))]
fn allocate(
    costs: Vec<Vec<f64>>,
    feasible: Option<Vec<Vec<bool>>>,
    dependencies: Vec<(usize, usize)>,
    discount: f64,
    algorithm: &str,
) -> PyResult<PyAllocation> {
    let m = costs.len();
    let n = costs.first().map_or(0, Vec::len);
    if dependencies.iter().any(|&(a, b)| a >= n || b >= n) {
        return Err(value_error("dependency index out of range"));
    }
    let feasible = feasible.unwrap_or_else(|| vec![vec![true; n]; m]);
    let table = CostTable {
        workers: (0..m)
            .map(|i| AgentId::new(format!("w{i}")).expect("non-empty id"))
            .collect(),
        services: (0..n).map(|j| format!("s{j}")).collect(),
        capability: CapabilityMatrix::from_rows(&feasible),
        rows: costs,
    };
    let options = AllocatorOptions {
        algorithm: self::algorithm(algorithm)?,
        ..Default::default()
    };
    allocator::allocate_table(
        &table,
        &DependencyMatrix::new(n, &dependencies),
        discount,
        &options,
    )
    .map(|inner| PyAllocation { inner })
    .map_err(value_error)
}

fn config(experiment: &PyExperiment, cluster: &PyCluster, seed: Option<u64>) -> SimConfig {
    let mut cfg = SimConfig::new(cluster.inner.clone(), experiment.inner.clone());
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg
}

/// One allocation round on freshly sampled workloads.
#[pyfunction]
#[pyo3(signature = (experiment, cluster, seed = None))]
fn allocate_experiment(
    experiment: &PyExperiment,
    cluster: &PyCluster,
    seed: Option<u64>,
) -> PyResult<PyAllocation> {
    let run = swarmsim::run_iteration(&config(experiment, cluster, seed), 0).map_err(sim_error)?;
    Ok(PyAllocation {
        inner: run.allocation,
    })
}

#[pyfunction]
#[pyo3(signature = (experiment, cluster, iterations, seed, parallel_cost_calc = true))]
fn simulate(
    experiment: &PyExperiment,
    cluster: &PyCluster,
    iterations: usize,
    seed: u64,
    parallel_cost_calc: bool,
) -> PyResult<PySimulation> {
    let mut cfg = config(experiment, cluster, Some(seed));
    cfg.iterations = iterations;
    cfg.parallel_cost_calc = parallel_cost_calc;
    let runs = swarmsim::run_experiment(&cfg).map_err(sim_error)?;
    let history = AllocationHistory::from_iterations(&runs).map_err(value_error)?;
    Ok(PySimulation {
        history,
        traces: runs.iter().map(|r| r.trace.to_jsonl()).collect(),
        elapsed_ms: runs.iter().map(|r| r.trace.timings.elapsed_ms).collect(),
    })
}

/// `(workers, services, elapsed_ms)` for the grid `1..=max_workers` x
/// `1..=max_services`, services cloned from `experiment`.
#[pyfunction]
#[pyo3(signature = (experiment, cluster, max_workers, max_services, seed, parallel_cost_calc = true))]
fn measure_scaling(
    experiment: &PyExperiment,
    cluster: &PyCluster,
    max_workers: usize,
    max_services: usize,
    seed: u64,
    parallel_cost_calc: bool,
) -> PyResult<Vec<(usize, usize, u64)>> {
    let mut cfg = config(experiment, cluster, Some(seed));
    cfg.parallel_cost_calc = parallel_cost_calc;
    let grid =
        swarmsim::measure_scaling(1..=max_workers, 1..=max_services, &cfg).map_err(sim_error)?;
    Ok(grid
        .cells
        .iter()
        .map(|c| (c.workers, c.services, c.elapsed_ms))
        .collect())
}

/// Min-cost max-flow on `edges = [(from, to, capacity, cost), ...]`.
/// Returns `(total_flow, total_cost, per_edge_flow)`.
#[pyfunction]
#[pyo3(signature = (vertices, source, sink, edges, algorithm = "ssp"))]
fn min_cost_flow(
    vertices: usize,
    source: usize,
    sink: usize,
    edges: Vec<(usize, usize, i64, i64)>,
    algorithm: &str,
) -> PyResult<(i64, i64, Vec<i64>)> {
    let mut net = FlowNetwork::new(vertices, source, sink);
    for (u, v, cap, cost) in edges {
        net.add_edge(u, v, cap, cost);
    }
    let r = mcmf::solve_with(&net, self::algorithm(algorithm)?).map_err(value_error)?;
    Ok((r.total_flow, r.total_cost, r.flow))
}

#[pymodule]
#[pyo3(name = "swarmflow")]
fn swarmflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyService>()?;
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(cpu_cost, m)?)?;
    m.add_function(wrap_pyfunction!(vram_cost, m)?)?;
    m.add_function(wrap_pyfunction!(swap_cost, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth_cost, m)?)?;
    m.add_function(wrap_pyfunction!(edge_cost, m)?)?;
    m.add_function(wrap_pyfunction!(jains_index, m)?)?;
    m.add_function(wrap_pyfunction!(allocate, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(measure_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(min_cost_flow, m)?)?;
    Ok(())
}
