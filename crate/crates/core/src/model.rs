//! Swarm vocabulary shared by every other module: agents, roles, hardware
//! profiles, workload samples and the master-owned swarm state.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("agent id must not be empty")]
    EmptyId,
    #[error("agent `{0}` is already part of the swarm")]
    DuplicateAgent(AgentId),
    #[error("agent `{0}` is the master of this swarm and cannot join as a worker")]
    MasterConflict(AgentId),
    #[error("agent `{0}` is not a worker of this swarm")]
    UnknownWorker(AgentId),
    #[error("workload `{field}` = {value} is outside [0, 1]")]
    WorkloadOutOfRange { field: &'static str, value: f64 },
    #[error("hardware profile: {0}")]
    InvalidProfile(String),
    #[error("worker `{id}` cannot move from {from:?} to {to:?}")]
    InvalidTransition {
        id: AgentId,
        from: WorkerStatus,
        to: WorkerStatus,
    },
}

/// Opaque, non-empty agent identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentId(String);

impl AgentId {
    pub fn new(value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        if value.is_empty() {
            return Err(ModelError::EmptyId);
        }
        Ok(Self(value))
    }

    /// Fresh random UUID-style identifier.
    pub fn generate() -> Self {
        Self(uuid::Uuid::new_v4().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AgentId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AgentId> for String {
    fn from(id: AgentId) -> Self {
        id.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Master,
    Worker,
}

/// What a worker's hardware offers. A service is hostable on a worker iff the
/// service's required capability tags are a subset of `capabilities`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub capabilities: BTreeSet<String>,
    pub cpu_cores: u32,
    #[serde(default)]
    pub vram_mb: u64,
    #[serde(default)]
    pub swap_mb: u64,
    pub bandwidth_mbps: f64,
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.cpu_cores == 0 {
            return Err(ModelError::InvalidProfile(
                "cpu_cores must be positive".into(),
            ));
        }
        if !(self.bandwidth_mbps.is_finite() && self.bandwidth_mbps > 0.0) {
            return Err(ModelError::InvalidProfile(
                "bandwidth_mbps must be a positive number".into(),
            ));
        }
        if self.capabilities.iter().any(String::is_empty) {
            return Err(ModelError::InvalidProfile("empty capability tag".into()));
        }
        Ok(())
    }

    pub fn can_host<'a, I>(&self, required: I) -> bool
    where
        I: IntoIterator<Item = &'a String>,
    {
        required
            .into_iter()
            .all(|tag| self.capabilities.contains(tag))
    }
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            capabilities: BTreeSet::new(),
            cpu_cores: 1,
            vram_mb: 0,
            swap_mb: 0,
            bandwidth_mbps: 100.0,
        }
    }
}

/// Relative workload β per resource, each in `[0, 1]`.
///
/// `cpu`, `vram` and `swap` are utilizations: their costs grow with β.
/// `bandwidth` is fed to the bandwidth cost as `(1 - β)^4`, so that cost
/// falls as β rises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSample {
    pub cpu: f64,
    pub vram: f64,
    pub swap: f64,
    pub bandwidth: f64,
    #[serde(default)]
    pub timestamp: u64,
}

impl WorkloadSample {
    pub fn new(cpu: f64, vram: f64, swap: f64, bandwidth: f64) -> Result<Self, ModelError> {
        let sample = Self {
            cpu,
            vram,
            swap,
            bandwidth,
            timestamp: 0,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn idle() -> Self {
        Self {
            cpu: 0.0,
            vram: 0.0,
            swap: 0.0,
            bandwidth: 0.0,
            timestamp: 0,
        }
    }

    pub fn at(mut self, timestamp: u64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.cpu, self.vram, self.swap, self.bandwidth]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("cpu", self.cpu),
            ("vram", self.vram),
            ("swap", self.swap),
            ("bandwidth", self.bandwidth),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::WorkloadOutOfRange { field, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkerStatus {
    Joined,
    Allocated,
    Running,
    Left,
}

impl WorkerStatus {
    /// Joined -> Allocated -> Running, and any state -> Left.
    pub fn can_transition_to(self, next: WorkerStatus) -> bool {
        use WorkerStatus::*;
        matches!(
            (self, next),
            (Joined, Allocated) | (Allocated, Running) | (Joined | Allocated | Running, Left)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub id: AgentId,
    pub profile: HardwareProfile,
    pub workload: WorkloadSample,
    pub status: WorkerStatus,
}

impl WorkerState {
    pub fn new(id: AgentId, profile: HardwareProfile, workload: WorkloadSample) -> Self {
        Self {
            id,
            profile,
            workload,
            status: WorkerStatus::Joined,
        }
    }

    pub fn transition(&mut self, next: WorkerStatus) -> Result<(), ModelError> {
        if !self.status.can_transition_to(next) {
            return Err(ModelError::InvalidTransition {
                id: self.id.clone(),
                from: self.status,
                to: next,
            });
        }
        self.status = next;
        Ok(())
    }
}

/// One swarm instance: a singleton master plus the workers that joined it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub swarm_id: String,
    pub master: AgentId,
    pub workers: Vec<WorkerState>,
}

/// Initializes an empty swarm owned by `master` with a fresh random id.
pub fn new_swarm(master: AgentId) -> SwarmState {
    SwarmState::with_id(uuid::Uuid::new_v4().to_string(), master)
}

impl SwarmState {
    pub fn with_id(swarm_id: impl Into<String>, master: AgentId) -> Self {
        Self {
            swarm_id: swarm_id.into(),
            master,
            workers: Vec::new(),
        }
    }

    pub fn role_of(&self, id: &AgentId) -> Option<Role> {
        if &self.master == id {
            Some(Role::Master)
        } else if self.workers.iter().any(|w| &w.id == id) {
            Some(Role::Worker)
        } else {
            None
        }
    }

    /// Adds `worker` with status `Joined`. Consumes and returns the swarm so
    /// callers can chain joins.
    pub fn join_worker(mut self, worker: WorkerState) -> Result<Self, ModelError> {
        self.add_worker(worker)?;
        Ok(self)
    }

    pub fn add_worker(&mut self, mut worker: WorkerState) -> Result<(), ModelError> {
        if worker.id == self.master {
            return Err(ModelError::MasterConflict(worker.id));
        }
        if self.workers.iter().any(|w| w.id == worker.id) {
            return Err(ModelError::DuplicateAgent(worker.id));
        }
        worker.status = WorkerStatus::Joined;
        self.workers.push(worker);
        Ok(())
    }

    /// Removes the worker from the roster and returns its final state.
    pub fn leave_worker(&mut self, id: &AgentId) -> Result<WorkerState, ModelError> {
        let idx = self
            .workers
            .iter()
            .position(|w| &w.id == id)
            .ok_or_else(|| ModelError::UnknownWorker(id.clone()))?;
        let mut worker = self.workers.remove(idx);
        worker.transition(WorkerStatus::Left)?;
        Ok(worker)
    }

    pub fn worker_mut(&mut self, id: &AgentId) -> Result<&mut WorkerState, ModelError> {
        self.workers
            .iter_mut()
            .find(|w| &w.id == id)
            .ok_or_else(|| ModelError::UnknownWorker(id.clone()))
    }

    /// Checks master uniqueness and worker-id distinctness.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        for w in &self.workers {
            if w.id == self.master {
                return Err(ModelError::MasterConflict(w.id.clone()));
            }
            if !seen.insert(&w.id) {
                return Err(ModelError::DuplicateAgent(w.id.clone()));
            }
        }
        Ok(())
    }
}
