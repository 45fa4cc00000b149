//! Service allocation as a min-cost max-flow problem.
//!
//! Workers sit on the left of the network, allocation units (single services
//! or pools of dependent services) on the right. Each worker hosts at most one
//! unit. A dependency component may be placed either as one pool or as its
//! individual services, never both, so every combination of per-component
//! choices is solved as its own flow problem and the best outcome is kept:
//! most services assigned, then lowest total cost, then earliest
//! configuration.

use std::fmt::Write as _;

use thiserror::Error;

use crate::costing::{
    check_discount, cost_row, descale, pooled_capability, CapabilityMatrix, CostEntry, CostMatrix,
    CostingError, DependencyMatrix,
};
use crate::definitions::{CostWeights, ServiceSpec};
use crate::mcmf::{self, Algorithm, EdgeId, FlowNetwork, McmfError};
use crate::model::{AgentId, WorkerState};

pub const DEFAULT_MAX_CONFIGURATIONS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("allocation needs at least one worker and one service")]
    EmptyProblem,
    #[error("{components} dependency components give 2^{components} configurations, above the bound of {bound}")]
    TooManyComponents { components: usize, bound: usize },
    #[error("input dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Costing(#[from] CostingError),
    #[error(transparent)]
    Solver(#[from] McmfError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AllocationUnit {
    Single(usize),
    /// Sorted service indices, at least two.
    Pool(Vec<usize>),
}

impl AllocationUnit {
    pub fn members(&self) -> &[usize] {
        match self {
            AllocationUnit::Single(j) => std::slice::from_ref(j),
            AllocationUnit::Pool(m) => m,
        }
    }

    pub fn is_pool(&self) -> bool {
        matches!(self, AllocationUnit::Pool(_))
    }

    /// Member names joined with `+`.
    pub fn label<S: AsRef<str>>(&self, services: &[S]) -> String {
        self.members()
            .iter()
            .map(|&j| services[j].as_ref())
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocatorOptions {
    pub max_configurations: usize,
    pub algorithm: Algorithm,
}

impl Default for AllocatorOptions {
    fn default() -> Self {
        Self {
            max_configurations: DEFAULT_MAX_CONFIGURATIONS,
            algorithm: Algorithm::default(),
        }
    }
}

/// Every way to place the dependency components: for `C` components with
/// two or more services, `2^C` unit sets. Configuration `c` splits component
/// `k` iff bit `k` of `c` is set, so the first configuration pools every
/// component. Units within a configuration are ordered by smallest member.
pub fn enumerate_unit_configurations(
    services: usize,
    dependencies: &DependencyMatrix,
    max_configurations: usize,
) -> Result<Vec<Vec<AllocationUnit>>, AllocationError> {
    if dependencies.len() != services {
        return Err(AllocationError::DimensionMismatch(format!(
            "{services} services but a {0}x{0} dependency matrix",
            dependencies.len()
        )));
    }
    let components = dependencies.components();
    let multi = components.iter().filter(|c| c.len() > 1).count();
    if multi >= usize::BITS as usize - 1 || (1usize << multi) > max_configurations {
        return Err(AllocationError::TooManyComponents {
            components: multi,
            bound: max_configurations,
        });
    }
    let mut configurations = Vec::with_capacity(1 << multi);
    for c in 0..(1usize << multi) {
        let mut units = Vec::with_capacity(services);
        let mut k = 0;
        for component in &components {
            if component.len() == 1 {
                units.push(AllocationUnit::Single(component[0]));
                continue;
            }
            if c & (1 << k) != 0 {
                units.extend(component.iter().map(|&j| AllocationUnit::Single(j)));
            } else {
                units.push(AllocationUnit::Pool(component.clone()));
            }
            k += 1;
        }
        units.sort_by_key(|u| u.members()[0]);
        configurations.push(units);
    }
    Ok(configurations)
}

/// Everything the master knows before solving: worker roster, service
/// names, the capability matrix and each worker's per-service cost row.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub workers: Vec<AgentId>,
    pub services: Vec<String>,
    pub capability: CapabilityMatrix,
    pub rows: Vec<Vec<f64>>,
}

impl CostTable {
    pub fn build(
        workers: &[WorkerState],
        services: &[ServiceSpec],
        weights: &CostWeights,
    ) -> Result<Self, AllocationError> {
        let rows = workers
            .iter()
            .map(|w| cost_row(&w.workload, services, weights))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            workers: workers.iter().map(|w| w.id.clone()).collect(),
            services: services.iter().map(|s| s.name.clone()).collect(),
            capability: CapabilityMatrix::build(workers.iter().map(|w| &w.profile), services),
            rows,
        })
    }

    fn check(&self) -> Result<(), AllocationError> {
        if self.workers.is_empty() || self.services.is_empty() {
            return Err(AllocationError::EmptyProblem);
        }
        let (m, n) = (self.workers.len(), self.services.len());
        if self.capability.workers() != m
            || self.capability.services() != n
            || self.rows.len() != m
            || self.rows.iter().any(|r| r.len() != n)
        {
            return Err(AllocationError::DimensionMismatch(format!(
                "expected {m} workers x {n} services"
            )));
        }
        if self
            .rows
            .iter()
            .flatten()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(AllocationError::DimensionMismatch(
                "cost rows must be non-negative and finite".into(),
            ));
        }
        Ok(())
    }

    /// Real cost of `unit` on worker `i`, pools discounted by `discount`.
    fn unit_cost(&self, i: usize, unit: &AllocationUnit, discount: f64) -> CostEntry {
        if !pooled_capability(unit.members(), i, &self.capability) {
            return CostEntry::Infeasible;
        }
        match unit {
            AllocationUnit::Single(j) => CostEntry::Feasible(self.rows[i][*j]),
            AllocationUnit::Pool(members) => {
                let sum: f64 = members.iter().map(|&j| self.rows[i][j]).sum();
                CostEntry::Feasible(discount * sum)
            }
        }
    }

    pub fn unit_cost_matrix(&self, units: &[AllocationUnit], discount: f64) -> CostMatrix {
        CostMatrix::from_fn(self.workers.len(), units.len(), |i, u| {
            self.unit_cost(i, &units[u], discount)
        })
    }
}

/// The flow network for one configuration plus the worker -> unit edges.
#[derive(Debug, Clone)]
pub struct AllocationNetwork {
    pub network: FlowNetwork,
    /// `(edge, worker, unit)` for every feasible worker -> unit pair.
    pub assignment_edges: Vec<(EdgeId, usize, usize)>,
}

/// Vertex layout: source `0`, workers `1..=m`, units `m+1..=m+k`, sink
/// `m+k+1`. Source and sink edges have capacity 1. Worker -> unit edges exist
/// only for feasible pairs and carry the integerized cost.
///
/// When the configuration contains pools, the unit -> sink edges carry a
/// priority term `M·(K - |unit|)` (K the largest unit size, M above any
/// total assignment cost) so that among maximum flows the one placing the
/// most services wins before cost is compared. Without pools those edges
/// cost 0.
pub fn build_network(
    workers: usize,
    units: &[AllocationUnit],
    costs: &CostMatrix,
) -> Result<AllocationNetwork, AllocationError> {
    if workers == 0 || units.is_empty() {
        return Err(AllocationError::EmptyProblem);
    }
    if costs.rows() != workers || costs.cols() != units.len() {
        return Err(AllocationError::DimensionMismatch(format!(
            "cost matrix is {}x{}, expected {}x{}",
            costs.rows(),
            costs.cols(),
            workers,
            units.len()
        )));
    }
    let k = units.len();
    let (source, sink) = (0, workers + k + 1);
    let mut net = FlowNetwork::new(workers + k + 2, source, sink);
    for i in 0..workers {
        net.add_edge(source, 1 + i, 1, 0);
    }
    let mut assignment_edges = Vec::new();
    for i in 0..workers {
        for u in 0..k {
            if let Some(c) = costs.integerized(i, u) {
                let e = net.add_edge(1 + i, 1 + workers + u, 1, c);
                assignment_edges.push((e, i, u));
            }
        }
    }
    let largest = units.iter().map(|u| u.members().len()).max().unwrap_or(1);
    let priority = if largest > 1 {
        1 + (0..k)
            .map(|u| {
                (0..workers)
                    .filter_map(|i| costs.integerized(i, u))
                    .max()
                    .unwrap_or(0)
            })
            .sum::<i64>()
    } else {
        0
    };
    for (u, unit) in units.iter().enumerate() {
        let size = unit.members().len();
        net.add_edge(1 + workers + u, sink, 1, priority * (largest - size) as i64);
    }
    Ok(AllocationNetwork {
        network: net,
        assignment_edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub service: String,
    pub service_index: usize,
    pub worker: AgentId,
    pub worker_index: usize,
    /// Label of the unit the service was placed with, e.g. `a` or `a+b`.
    pub unit: String,
    /// The service's share of its unit cost (discounted inside pools).
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationOutcome {
    pub units: Vec<String>,
    pub assigned_services: usize,
    pub total_cost_scaled: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Ordered by service index.
    pub assignments: Vec<Assignment>,
    pub total_cost: f64,
    pub total_cost_scaled: i64,
    pub feasible: bool,
    pub unassigned: Vec<String>,
    pub configurations: Vec<ConfigurationOutcome>,
    /// Index into `configurations` of the chosen outcome.
    pub chosen: usize,
}

impl AllocationResult {
    pub fn assignment_for(&self, service: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.service == service)
    }
}

/// Computes every worker's cost row and allocates.
pub fn allocate(
    workers: &[WorkerState],
    services: &[ServiceSpec],
    dependencies: &DependencyMatrix,
    weights: &CostWeights,
    discount: f64,
) -> Result<AllocationResult, AllocationError> {
    if workers.is_empty() || services.is_empty() {
        return Err(AllocationError::EmptyProblem);
    }
    let table = CostTable::build(workers, services, weights)?;
    allocate_table(&table, dependencies, discount, &AllocatorOptions::default())
}

/// Allocates from precomputed cost rows.
pub fn allocate_table(
    table: &CostTable,
    dependencies: &DependencyMatrix,
    discount: f64,
    options: &AllocatorOptions,
) -> Result<AllocationResult, AllocationError> {
    table.check()?;
    check_discount(discount)?;
    let m = table.workers.len();
    let configurations = enumerate_unit_configurations(
        table.services.len(),
        dependencies,
        options.max_configurations,
    )?;

    let mut outcomes = Vec::with_capacity(configurations.len());
    let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
    for units in &configurations {
        let costs = table.unit_cost_matrix(units, discount);
        let built = build_network(m, units, &costs)?;
        let flow = mcmf::solve_with(&built.network, options.algorithm)?;
        let chosen: Vec<(usize, usize)> = built
            .assignment_edges
            .iter()
            .filter(|(e, _, _)| flow.flow[*e] > 0)
            .map(|&(_, i, u)| (i, u))
            .collect();
        let assigned_services = chosen.iter().map(|&(_, u)| units[u].members().len()).sum();
        let total_cost_scaled = chosen
            .iter()
            .map(|&(i, u)| costs.integerized(i, u).expect("chosen edges are feasible"))
            .sum();
        let outcome = ConfigurationOutcome {
            units: units.iter().map(|u| u.label(&table.services)).collect(),
            assigned_services,
            total_cost_scaled,
        };
        let better = match &best {
            None => true,
            Some((idx, _)) => {
                let b: &ConfigurationOutcome = &outcomes[*idx];
                assigned_services > b.assigned_services
                    || (assigned_services == b.assigned_services
                        && total_cost_scaled < b.total_cost_scaled)
            }
        };
        outcomes.push(outcome);
        if better {
            best = Some((outcomes.len() - 1, chosen));
        }
    }

    let (chosen_idx, pairs) = best.expect("at least one configuration");
    let units = &configurations[chosen_idx];
    let mut assignments = Vec::new();
    for &(i, u) in &pairs {
        let unit = &units[u];
        let factor = if unit.is_pool() { discount } else { 1.0 };
        for &j in unit.members() {
            assignments.push(Assignment {
                service: table.services[j].clone(),
                service_index: j,
                worker: table.workers[i].clone(),
                worker_index: i,
                unit: unit.label(&table.services),
                cost: factor * table.rows[i][j],
            });
        }
    }
    assignments.sort_by_key(|a| a.service_index);
    let unassigned: Vec<String> = (0..table.services.len())
        .filter(|j| !assignments.iter().any(|a| a.service_index == *j))
        .map(|j| table.services[j].clone())
        .collect();
    let total_cost_scaled = outcomes[chosen_idx].total_cost_scaled;
    Ok(AllocationResult {
        feasible: unassigned.is_empty(),
        total_cost: descale(total_cost_scaled),
        total_cost_scaled,
        assignments,
        unassigned,
        configurations: outcomes,
        chosen: chosen_idx,
    })
}

/// Plain-text report: summary line, one row per assigned service,
/// unassigned services and every configuration considered.
pub fn explain(result: &AllocationResult) -> String {
    let mut out = String::new();
    let total = result.assignments.len() + result.unassigned.len();
    let _ = writeln!(
        out,
        "allocation: {}, {}/{} services assigned, total cost {:.6}",
        if result.feasible {
            "feasible"
        } else {
            "infeasible"
        },
        result.assignments.len(),
        total,
        result.total_cost
    );
    let sw = result
        .assignments
        .iter()
        .map(|a| a.service.len())
        .chain([7])
        .max()
        .unwrap_or(7);
    let ww = result
        .assignments
        .iter()
        .map(|a| a.worker.as_str().len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let uw = result
        .assignments
        .iter()
        .map(|a| a.unit.len())
        .chain([4])
        .max()
        .unwrap_or(4);
    let _ = writeln!(
        out,
        "{:<sw$}  {:<ww$}  {:<uw$}  {:>12}",
        "service", "worker", "unit", "cost"
    );
    for a in &result.assignments {
        let _ = writeln!(
            out,
            "{:<sw$}  {:<ww$}  {:<uw$}  {:>12.6}",
            a.service,
            a.worker.as_str(),
            a.unit,
            a.cost
        );
    }
    if !result.unassigned.is_empty() {
        let _ = writeln!(out, "unassigned: {}", result.unassigned.join(", "));
    }
    let _ = writeln!(out, "configurations:");
    for (idx, c) in result.configurations.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {} [{}] assigned {}, cost {:.6}",
            if idx == result.chosen { "*" } else { "-" },
            c.units.join(", "),
            c.assigned_services,
            descale(c.total_cost_scaled)
        );
    }
    out
}
