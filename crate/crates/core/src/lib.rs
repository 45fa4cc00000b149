//! Container-based experiment orchestration: declarative service and
//! experiment definitions, a min-cost-flow service allocator with
//! workload-sensitive costs and pooled services, a deterministic
//! master-worker swarm simulator, and fairness metrics.

pub mod allocator;
pub mod cli;
pub mod costing;
pub mod definitions;
pub mod mcmf;
pub mod metrics;
pub mod model;
pub mod swarmsim;
