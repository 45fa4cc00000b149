//! Workload-sensitive cost functions and the matrices fed to the allocator:
//! capability matrix H, dependency matrix Ξ, cost matrix A and capacity
//! matrix C.

use thiserror::Error;

use crate::definitions::{CostWeights, ServiceSpec};
use crate::model::{HardwareProfile, WorkloadSample};

/// Costs are multiplied by this and rounded half-to-even before solving.
pub const COST_SCALE: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostingError {
    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },
    #[error("a pool needs at least two members, got {0}")]
    PoolTooSmall(usize),
    #[error("pool discount {0} is outside (0, 1]")]
    InvalidDiscount(f64),
    #[error("invalid weights: {0}")]
    Weights(String),
}

fn check_domain(alpha: f64, beta: f64) -> Result<(), CostingError> {
    if !(0.0..=100.0).contains(&alpha) {
        return Err(CostingError::Domain {
            what: "alpha",
            value: alpha,
        });
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(CostingError::Domain {
            what: "beta",
            value: beta,
        });
    }
    Ok(())
}

/// ε = α·β⁴
pub fn cpu_cost(alpha: f64, beta: f64) -> Result<f64, CostingError> {
    check_domain(alpha, beta)?;
    Ok(alpha * beta.powi(4))
}

/// η = α·β⁴
pub fn vram_cost(alpha: f64, beta: f64) -> Result<f64, CostingError> {
    check_domain(alpha, beta)?;
    Ok(alpha * beta.powi(4))
}

/// ζ = α·β. Rises earlier than the quartic CPU/VRAM costs.
pub fn swap_cost(alpha: f64, beta: f64) -> Result<f64, CostingError> {
    check_domain(alpha, beta)?;
    Ok(alpha * beta)
}

/// θ = α·(1−β)⁴
pub fn bandwidth_cost(alpha: f64, beta: f64) -> Result<f64, CostingError> {
    check_domain(alpha, beta)?;
    Ok(alpha * (1.0 - beta).powi(4))
}

/// Weighted cost `a = ε·δε + η·δη + ζ·δζ + θ·δθ` of running a service with
/// predefined cost `alpha` on a worker with the given workload.
pub fn edge_cost(
    alpha: f64,
    workload: &WorkloadSample,
    weights: &CostWeights,
) -> Result<f64, CostingError> {
    weights.validate().map_err(CostingError::Weights)?;
    Ok(cpu_cost(alpha, workload.cpu)? * weights.cpu
        + vram_cost(alpha, workload.vram)? * weights.vram
        + swap_cost(alpha, workload.swap)? * weights.swap
        + bandwidth_cost(alpha, workload.bandwidth)? * weights.bandwidth)
}

/// Edge costs of every service on one worker, computed in service order.
pub fn cost_row(
    workload: &WorkloadSample,
    services: &[ServiceSpec],
    weights: &CostWeights,
) -> Result<Vec<f64>, CostingError> {
    services
        .iter()
        .map(|s| edge_cost(s.predefined_cost, workload, weights))
        .collect()
}

/// Cost of a pooled service: `γ · Σ member edge costs`.
pub fn pooled_cost(
    member_alphas: &[f64],
    workload: &WorkloadSample,
    weights: &CostWeights,
    discount: f64,
) -> Result<f64, CostingError> {
    if member_alphas.len() < 2 {
        return Err(CostingError::PoolTooSmall(member_alphas.len()));
    }
    check_discount(discount)?;
    let mut sum = 0.0;
    for &alpha in member_alphas {
        sum += edge_cost(alpha, workload, weights)?;
    }
    Ok(discount * sum)
}

pub(crate) fn check_discount(discount: f64) -> Result<(), CostingError> {
    if discount > 0.0 && discount <= 1.0 {
        Ok(())
    } else {
        Err(CostingError::InvalidDiscount(discount))
    }
}

/// Rounds a real cost onto the solver's integer grid.
pub fn integerize(cost: f64) -> i64 {
    (cost * COST_SCALE as f64).round_ties_even() as i64
}

pub fn descale(cost: i64) -> f64 {
    cost as f64 / COST_SCALE as f64
}

/// Binary worker×service matrix: `H[i][j]` iff worker `i` offers every
/// capability tag service `j` requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapabilityMatrix {
    workers: usize,
    services: usize,
    entries: Vec<bool>,
}

impl CapabilityMatrix {
    pub fn build<'a, I>(profiles: I, services: &[ServiceSpec]) -> Self
    where
        I: IntoIterator<Item = &'a HardwareProfile>,
    {
        let mut entries = Vec::new();
        let mut workers = 0;
        for profile in profiles {
            workers += 1;
            entries.extend(
                services
                    .iter()
                    .map(|s| profile.can_host(&s.required_capabilities)),
            );
        }
        Self {
            workers,
            services: services.len(),
            entries,
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let services = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == services),
            "ragged capability rows"
        );
        Self {
            workers: rows.len(),
            services,
            entries: rows.concat(),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn services(&self) -> usize {
        self.services
    }

    pub fn get(&self, worker: usize, service: usize) -> bool {
        assert!(worker < self.workers && service < self.services);
        self.entries[worker * self.services + service]
    }
}

/// Conjunction of the capability entries of every pool member on `worker`.
pub fn pooled_capability(members: &[usize], worker: usize, h: &CapabilityMatrix) -> bool {
    members.iter().all(|&j| h.get(worker, j))
}

/// Binary service×service matrix of the dependency relation, zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl DependencyMatrix {
    /// Builds Ξ from directed `(k, j)` pairs ("k depends on j"). Self pairs
    /// are dropped; indices must be `< n`.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut entries = vec![false; n * n];
        for &(k, j) in pairs {
            assert!(k < n && j < n, "dependency index out of range");
            if k != j {
                entries[k * n + j] = true;
            }
        }
        Self { n, entries }
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, &[])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, k: usize, j: usize) -> bool {
        self.entries[k * self.n + j]
    }

    /// Connected components of the undirected closure, each sorted, ordered
    /// by their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for k in 0..self.n {
            for j in 0..self.n {
                if self.get(k, j) {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let root = find(&mut parent, v);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(v);
        }
        groups
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostEntry {
    Feasible(f64),
    Infeasible,
}

impl CostEntry {
    pub fn value(self) -> Option<f64> {
        match self {
            CostEntry::Feasible(v) => Some(v),
            CostEntry::Infeasible => None,
        }
    }
}

/// Worker×unit cost matrix A. Infeasible pairs are marked, never given a
/// sentinel number.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<CostEntry>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CostEntry) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for u in 0..cols {
                let e = f(i, u);
                if let CostEntry::Feasible(v) = e {
                    assert!(
                        v >= 0.0 && v.is_finite(),
                        "cost entries must be non-negative"
                    );
                }
                entries.push(e);
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale(&self) -> i64 {
        COST_SCALE
    }

    pub fn get(&self, row: usize, col: usize) -> CostEntry {
        self.entries[row * self.cols + col]
    }

    pub fn integerized(&self, row: usize, col: usize) -> Option<i64> {
        self.get(row, col).value().map(integerize)
    }
}

/// Capacity matrix C: every worker can run exactly one container, so every
/// feasible pair carries capacity 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityMatrix {
    rows: usize,
    cols: usize,
}

impl CapacityMatrix {
    pub fn unit(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        assert!(row < self.rows && col < self.cols);
        1
    }
}
