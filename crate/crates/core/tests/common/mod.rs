//! Oracles and generators shared by the integration test targets.
#![allow(dead_code)]

use proptest::prelude::*;
use swarmflow::allocator::CostTable;
use swarmflow::costing::{CapabilityMatrix, DependencyMatrix};
use swarmflow::definitions::{CostWeights, ExperimentSpec, NetworkConfig, ServiceSpec, Volume};
use swarmflow::model::AgentId;

#[derive(Debug, Clone)]
pub struct Instance {
    pub rows: Vec<Vec<f64>>,
    pub feasible: Vec<Vec<bool>>,
    pub dependency: Option<(usize, usize)>,
    pub discount: f64,
}

impl Instance {
    pub fn table(&self) -> CostTable {
        CostTable {
            workers: (0..self.rows.len())
                .map(|i| AgentId::new(format!("w{i}")).unwrap())
                .collect(),
            services: (0..self.rows[0].len()).map(|j| format!("s{j}")).collect(),
            capability: CapabilityMatrix::from_rows(&self.feasible),
            rows: self.rows.clone(),
        }
    }

    pub fn dependencies(&self) -> DependencyMatrix {
        let n = self.rows[0].len();
        DependencyMatrix::new(n, &self.dependency.into_iter().collect::<Vec<_>>())
    }
}

pub fn grid(x: f64) -> i64 {
    (x * 1e6).round_ties_even() as i64
}

/// Exhaustive search over every (configuration, assignment) pair with at
/// most one dependency pair: returns (services placed, scaled cost) of the
/// best outcome, most services first, then cheapest.
pub fn oracle(inst: &Instance) -> (usize, i64) {
    let n = inst.rows[0].len();
    let m = inst.rows.len();
    let mut configurations: Vec<Vec<Vec<usize>>> = vec![(0..n).map(|j| vec![j]).collect()];
    if let Some((a, b)) = inst.dependency {
        let (a, b) = (a.min(b), a.max(b));
        let mut pooled: Vec<Vec<usize>> = (0..n)
            .filter(|&j| j != a && j != b)
            .map(|j| vec![j])
            .collect();
        pooled.push(vec![a, b]);
        configurations.push(pooled);
    }
    let mut best = (0usize, 0i64);
    for units in &configurations {
        let cost = |i: usize, unit: &Vec<usize>| -> Option<i64> {
            if !unit.iter().all(|&j| inst.feasible[i][j]) {
                return None;
            }
            if unit.len() == 1 {
                Some(grid(inst.rows[i][unit[0]]))
            } else {
                let sum: f64 = unit.iter().map(|&j| inst.rows[i][j]).sum();
                Some(grid(inst.discount * sum))
            }
        };
        // every map worker -> (nothing | unit), units used at most once
        let k = units.len();
        let mut choice = vec![0usize; m];
        loop {
            let mut used = vec![false; k];
            let mut ok = true;
            let (mut placed, mut total) = (0usize, 0i64);
            for (i, &c) in choice.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let u = c - 1;
                match (used[u], cost(i, &units[u])) {
                    (false, Some(c)) => {
                        used[u] = true;
                        placed += units[u].len();
                        total += c;
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && (placed > best.0 || (placed == best.0 && total < best.1)) {
                best = (placed, total);
            }
            let mut i = 0;
            while i < m {
                choice[i] += 1;
                if choice[i] <= k {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
    }
    best
}

pub fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=5, 1usize..=4).prop_flat_map(|(m, n)| {
        let dep = if n >= 2 {
            proptest::option::of((0..n, 0..n).prop_filter("distinct", |(a, b)| a != b)).boxed()
        } else {
            Just(None).boxed()
        };
        (
            proptest::collection::vec(proptest::collection::vec(0.0..100.0f64, n), m),
            proptest::collection::vec(
                proptest::collection::vec(proptest::bool::weighted(0.75), n),
                m,
            ),
            dep,
            prop_oneof![Just(1.0), Just(0.9), 0.05..=1.0f64],
        )
            .prop_map(|(rows, feasible, dependency, discount)| Instance {
                rows,
                feasible,
                dependency,
                discount,
            })
    })
}

pub fn tag() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,8}"
}

pub fn service(name: String) -> impl Strategy<Value = ServiceSpec> {
    (
        "[a-z]{3,8}:[0-9]{2}\\.[0-9]{2}",
        proptest::collection::vec("[a-z0-9.+-]{1,12}", 0..4),
        proptest::collection::vec("https?://[a-z]{1,10}\\.org/[a-z]{0,6}", 0..3),
        proptest::collection::vec(("/[a-z]{1,8}", "/[a-z]{1,8}"), 0..3),
        "[ -~]{1,30}",
        0.0..=100.0f64,
        proptest::collection::btree_set(tag(), 0..3),
        0.001..1e5f64,
    )
        .prop_map(
            move |(base_os, packages, repositories, volumes, entrypoint, cost, caps, size)| {
                ServiceSpec {
                    name: name.clone(),
                    base_os,
                    packages,
                    repositories,
                    volumes: volumes
                        .into_iter()
                        .map(|(h, c)| Volume {
                            host_path: h,
                            container_path: c,
                        })
                        .collect(),
                    entrypoint,
                    predefined_cost: cost,
                    required_capabilities: caps,
                    image_size_mb: size,
                }
            },
        )
}

pub fn experiment() -> impl Strategy<Value = ExperimentSpec> {
    (1usize..6)
        .prop_flat_map(|n| {
            let services: Vec<_> = (0..n).map(|j| service(format!("svc{j}"))).collect();
            (
                services,
                proptest::collection::vec((0..n, 0..n), 0..4),
                proptest::collection::vec(0.0..1.0f64, 4),
                0.01..=1.0f64,
                (0u8..=255, 8u8..=30),
                proptest::collection::vec(any::<u16>(), 0..4),
            )
        })
        .prop_map(
            |(services, deps, raw_weights, discount, (octet, prefix), ports)| {
                let dependencies = deps
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| (services[a].name.clone(), services[b].name.clone()))
                    .collect();
                let total: f64 = raw_weights.iter().sum::<f64>() + 1e-3;
                let w: Vec<f64> = raw_weights.iter().map(|x| (x + 2.5e-4) / total).collect();
                let mask = u32::MAX << (32 - prefix as u32);
                let network =
                    std::net::Ipv4Addr::from(u32::from_be_bytes([10, octet, 7, 0]) & mask);
                ExperimentSpec {
                    name: "exp".into(),
                    services,
                    dependencies,
                    network: NetworkConfig {
                        subnet: format!("{network}/{prefix}"),
                        ports,
                    },
                    weights: CostWeights {
                        cpu: w[0],
                        vram: w[1],
                        swap: w[2],
                        bandwidth: 1.0 - w[0] - w[1] - w[2],
                    },
                    pool_discount: discount,
                }
            },
        )
}
