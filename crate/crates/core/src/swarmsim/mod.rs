//! Deterministic simulation of the master/worker lifecycle on a logical
//! millisecond clock: joins, cost polling, allocation, overlay registration,
//! container fetch and start.

mod kv;
mod workload;

use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{
    allocate_table, AllocationError, AllocationResult, AllocatorOptions, CostTable,
};
use crate::costing::DependencyMatrix;
use crate::definitions::{
    parse_trace_csv, ClusterSpec, ExperimentSpec, WorkerSpec, WorkloadGenerator,
};
use crate::model::{
    AgentId, HardwareProfile, ModelError, SwarmState, WorkerState, WorkerStatus, WorkloadSample,
};

pub use kv::{KvError, KvRegistry, Versioned};
pub use workload::WorkloadSampler;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("subnet {subnet} has no address left for worker #{index}")]
    SubnetExhausted { subnet: String, index: usize },
}

/// Image fetch plus container start: `base_ms + per_mb_ms * image_size_mb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FetchLatency {
    pub base_ms: u64,
    pub per_mb_ms: f64,
}

impl Default for FetchLatency {
    fn default() -> Self {
        Self {
            base_ms: 100,
            per_mb_ms: 2.0,
        }
    }
}

impl FetchLatency {
    pub fn duration_ms(&self, image_size_mb: f64) -> u64 {
        self.base_ms + (self.per_mb_ms * image_size_mb).round().max(0.0) as u64
    }
}

/// Fixed step costs of the lifecycle, in logical milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseLatency {
    pub join_ms: u64,
    /// Master-side cost of sending one cost request.
    pub dispatch_ms: u64,
    pub poll_rtt_ms: u64,
    /// Worker-side cost of one service's cost entry.
    pub per_service_cost_ms: u64,
    pub allocation_ms: u64,
}

impl Default for PhaseLatency {
    fn default() -> Self {
        Self {
            join_ms: 3,
            dispatch_ms: 1,
            poll_rtt_ms: 2,
            per_service_cost_ms: 5,
            allocation_ms: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cluster: ClusterSpec,
    pub experiment: ExperimentSpec,
    pub seed: u64,
    pub iterations: usize,
    pub fetch_latency: FetchLatency,
    pub parallel_cost_calc: bool,
    pub latency: PhaseLatency,
    pub allocator: AllocatorOptions,
}

impl SimConfig {
    /// One iteration seeded from the cluster file, parallel cost polling.
    pub fn new(cluster: ClusterSpec, experiment: ExperimentSpec) -> Self {
        Self {
            seed: cluster.seed,
            cluster,
            experiment,
            iterations: 1,
            fetch_latency: FetchLatency::default(),
            parallel_cost_calc: true,
            latency: PhaseLatency::default(),
            allocator: AllocatorOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.iterations == 0 {
            return Err(SimError::Config("iterations must be at least 1".into()));
        }
        if !(self.fetch_latency.per_mb_ms.is_finite() && self.fetch_latency.per_mb_ms >= 0.0) {
            return Err(SimError::Config(
                "per_mb_ms must be finite and non-negative".into(),
            ));
        }
        if self.experiment.services.is_empty() || self.cluster.workers.is_empty() {
            return Err(AllocationError::EmptyProblem.into());
        }
        Ok(())
    }
}

/// Reads every `Trace` generator's `file` (relative to `base_dir`) into its
/// `samples`, leaving generators that already carry samples untouched.
pub fn load_trace_files(cluster: &mut ClusterSpec, base_dir: &Path) -> Result<(), SimError> {
    for w in &mut cluster.workers {
        if let WorkloadGenerator::Trace {
            samples,
            file: Some(file),
        } = &mut w.workload
        {
            if samples.is_empty() {
                let path = base_dir.join(&*file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
                *samples = parse_trace_csv(&text)
                    .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Join,
    CostRequest,
    CostReply,
    AllocationComputed,
    Registered,
    FetchStarted,
    ServiceStarted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub tick: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
}

/// Phase durations along the critical path. `elapsed_ms` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub join_ms: u64,
    pub cost_ms: u64,
    pub allocation_ms: u64,
    pub fetch_ms: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub iteration: usize,
    pub swarm_id: String,
    pub events: Vec<SimEvent>,
    pub timings: PhaseTimings,
}

impl SimTrace {
    /// One JSON object per line: `{"iteration":..,"tick":..,"kind":..,...}`.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            iteration: usize,
            #[serde(flatten)]
            event: &'a SimEvent,
        }
        let mut out = String::new();
        for event in &self.events {
            let line = Line {
                iteration: self.iteration,
                event,
            };
            out.push_str(&serde_json::to_string(&line).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn tick_of(&self, kind: EventKind) -> Option<u64> {
        self.events.iter().find(|e| e.kind == kind).map(|e| e.tick)
    }
}

/// Everything one simulated iteration produced.
#[derive(Debug, Clone)]
pub struct Iteration {
    pub allocation: AllocationResult,
    pub trace: SimTrace,
    pub registry: KvRegistry,
    pub swarm: SwarmState,
    /// Service roster in experiment order.
    pub services: Vec<String>,
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    samplers: Vec<WorkloadSampler>,
    dependencies: DependencyMatrix,
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let samplers = cfg
            .cluster
            .workers
            .iter()
            .map(|w| WorkloadSampler::new(&w.workload, cfg.seed, &w.id))
            .collect::<Result<Vec<_>, _>>()?;
        let dependencies = DependencyMatrix::new(
            cfg.experiment.services.len(),
            &cfg.experiment.dependency_indices(),
        );
        Ok(Self {
            cfg,
            samplers,
            dependencies,
        })
    }

    fn run(&self, iteration: usize) -> Result<Iteration, SimError> {
        let cfg = self.cfg;
        let lat = cfg.latency;
        let exp = &cfg.experiment;
        let n = exp.services.len() as u64;
        let mut events = Vec::new();
        let mut push = |tick, kind, worker: Option<&AgentId>, service: Option<&str>| {
            events.push(SimEvent {
                tick,
                kind,
                worker: worker.cloned(),
                service: service.map(str::to_string),
            })
        };

        // swarm init: the master publishes the overlay settings at t = 0
        let swarm_id = format!("swarm-{:016x}-{iteration}", cfg.seed);
        let mut swarm = SwarmState::with_id(swarm_id.clone(), AgentId::new("master")?);
        let mut registry = KvRegistry::new(swarm_id.clone());
        registry.put("overlay/subnet", exp.network.subnet.clone())?;
        registry.put(
            "overlay/ports",
            serde_json::to_string(&exp.network.ports).expect("ports serialize"),
        )?;

        // all workers join concurrently
        let joined_at = lat.join_ms;
        for (spec, sampler) in cfg.cluster.workers.iter().zip(&self.samplers) {
            swarm.add_worker(WorkerState::new(
                spec.id.clone(),
                spec.profile.clone(),
                sampler.sample(iteration),
            ))?;
            push(joined_at, EventKind::Join, Some(&spec.id), None);
        }

        // cost polling: each worker computes its row one service at a time
        let row_ms = lat.poll_rtt_ms + lat.per_service_cost_ms * n;
        let mut clock = joined_at;
        let mut cost_end = joined_at;
        for w in &swarm.workers {
            let request = clock + lat.dispatch_ms;
            let reply = request + row_ms;
            push(request, EventKind::CostRequest, Some(&w.id), None);
            push(reply, EventKind::CostReply, Some(&w.id), None);
            clock = if cfg.parallel_cost_calc {
                request
            } else {
                reply
            };
            cost_end = cost_end.max(reply);
        }
        let table = CostTable::build(&swarm.workers, &exp.services, &exp.weights)?;
        let allocation = allocate_table(
            &table,
            &self.dependencies,
            exp.pool_discount,
            &cfg.allocator,
        )?;
        let allocated_at = cost_end + lat.allocation_ms;
        push(allocated_at, EventKind::AllocationComputed, None, None);

        // the master registers every hosting worker as an overlay member
        let mut hosts: Vec<(usize, Vec<usize>)> = Vec::new();
        for a in &allocation.assignments {
            match hosts.iter_mut().find(|(w, _)| *w == a.worker_index) {
                Some((_, members)) => members.push(a.service_index),
                None => hosts.push((a.worker_index, vec![a.service_index])),
            }
        }
        hosts.sort_by_key(|(w, _)| *w);
        let (network, prefix) = exp.network.cidr().map_err(SimError::Config)?;
        let mut fetch_end = allocated_at;
        for (worker_index, members) in &hosts {
            let id = swarm.workers[*worker_index].id.clone();
            let address = member_address(network, prefix, *worker_index).ok_or_else(|| {
                SimError::SubnetExhausted {
                    subnet: exp.network.subnet.clone(),
                    index: *worker_index,
                }
            })?;
            let services: Vec<&str> = members
                .iter()
                .map(|&j| exp.services[j].name.as_str())
                .collect();
            let entry = serde_json::json!({
                "address": address.to_string(),
                "ports": exp.network.ports,
                "services": services,
            });
            registry.put(&format!("overlay/members/{id}"), entry.to_string())?;
            swarm.worker_mut(&id)?.transition(WorkerStatus::Allocated)?;
            push(allocated_at, EventKind::Registered, Some(&id), None);

            // pool members are fetched and started one after another
            let mut t = allocated_at;
            for &j in members {
                let service = &exp.services[j];
                push(t, EventKind::FetchStarted, Some(&id), Some(&service.name));
                t += cfg.fetch_latency.duration_ms(service.image_size_mb);
                push(t, EventKind::ServiceStarted, Some(&id), Some(&service.name));
            }
            swarm.worker_mut(&id)?.transition(WorkerStatus::Running)?;
            fetch_end = fetch_end.max(t);
        }

        events.sort_by_key(|e| e.tick);
        let timings = PhaseTimings {
            join_ms: joined_at,
            cost_ms: cost_end - joined_at,
            allocation_ms: lat.allocation_ms,
            fetch_ms: fetch_end - allocated_at,
            elapsed_ms: fetch_end,
        };
        Ok(Iteration {
            allocation,
            trace: SimTrace {
                iteration,
                swarm_id,
                events,
                timings,
            },
            registry,
            swarm,
            services: exp.services.iter().map(|s| s.name.clone()).collect(),
        })
    }
}

/// Host address for the `index`-th worker: skips the network address and
/// the gateway (`.1`), never hands out the broadcast address.
fn member_address(network: Ipv4Addr, prefix: u8, index: usize) -> Option<Ipv4Addr> {
    let size = 1u64 << (32 - prefix as u32);
    let offset = index as u64 + 2;
    (offset + 1 < size).then(|| Ipv4Addr::from(u32::from(network) + offset as u32))
}

/// Simulates iteration `iteration` of the experiment in isolation.
pub fn run_iteration(cfg: &SimConfig, iteration: usize) -> Result<Iteration, SimError> {
    Simulator::new(cfg)?.run(iteration)
}

/// Runs iterations `0..cfg.iterations` with freshly sampled workloads.
pub fn run_experiment(cfg: &SimConfig) -> Result<Vec<Iteration>, SimError> {
    let sim = Simulator::new(cfg)?;
    (0..cfg.iterations).map(|i| sim.run(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingCell {
    pub workers: usize,
    pub services: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScalingGrid {
    pub cells: Vec<ScalingCell>,
}

impl ScalingGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("workers,services,elapsed_ms\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{}", c.workers, c.services, c.elapsed_ms);
        }
        out
    }

    pub fn get(&self, workers: usize, services: usize) -> Option<u64> {
        self.cells
            .iter()
            .find(|c| c.workers == workers && c.services == services)
            .map(|c| c.elapsed_ms)
    }
}

/// Elapsed time (swarm start to the last container start) for every
/// (workers, services) cell, worker-major. Rosters are grown by cycling the
/// template's workers and services; dependencies are dropped.
pub fn measure_scaling(
    workers: RangeInclusive<usize>,
    services: RangeInclusive<usize>,
    template: &SimConfig,
) -> Result<ScalingGrid, SimError> {
    if workers.is_empty() || services.is_empty() || *workers.start() == 0 || *services.start() == 0
    {
        return Err(SimError::Config(
            "scaling ranges must be non-empty and start at 1".into(),
        ));
    }
    template.validate()?;
    let mut grid = ScalingGrid::default();
    for m in workers {
        for n in services.clone() {
            let mut cfg = template.clone();
            cfg.iterations = 1;
            cfg.cluster.workers = cycle_workers(&template.cluster.workers, m)?;
            cfg.experiment.services = (0..n)
                .map(|j| {
                    let proto =
                        &template.experiment.services[j % template.experiment.services.len()];
                    let mut s = proto.clone();
                    s.name = format!("{}-{:02}", proto.name, j + 1);
                    s
                })
                .collect();
            cfg.experiment.dependencies.clear();
            let it = run_iteration(&cfg, 0)?;
            grid.cells.push(ScalingCell {
                workers: m,
                services: n,
                elapsed_ms: it.trace.timings.elapsed_ms,
            });
        }
    }
    Ok(grid)
}

fn cycle_workers(template: &[WorkerSpec], count: usize) -> Result<Vec<WorkerSpec>, SimError> {
    (0..count)
        .map(|i| {
            let proto = &template[i % template.len()];
            let id = if i < template.len() {
                proto.id.clone()
            } else {
                AgentId::new(format!("{}-{}", proto.id, i / template.len()))?
            };
            Ok(WorkerSpec {
                id,
                profile: proto.profile.clone(),
                workload: proto.workload.clone(),
            })
        })
        .collect()
}

/// A roster of `count` default-profile workers named `w01`, `w02`, ...
pub fn uniform_cluster(count: usize, seed: u64, workload: WorkloadGenerator) -> ClusterSpec {
    ClusterSpec {
        seed,
        workers: (1..=count)
            .map(|i| WorkerSpec {
                id: AgentId::new(format!("w{i:02}")).expect("non-empty id"),
                profile: HardwareProfile::default(),
                workload: workload.clone(),
            })
            .collect(),
    }
}

/// The workloads each worker reported in one iteration, in roster order.
pub fn sampled_workloads(it: &Iteration) -> Vec<WorkloadSample> {
    it.swarm.workers.iter().map(|w| w.workload).collect()
}
