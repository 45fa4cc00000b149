//! Minimum-cost maximum-flow over integer capacities and non-negative integer
//! costs.
//!
//! Two solvers share one contract: [`Algorithm::SuccessiveShortestPath`]
//! (Dijkstra with potentials, the default) and [`Algorithm::CostScaling`]
//! (Goldberg-style cost-scaling push-relabel on the equivalent min-cost
//! circulation). Both return a maximum flow of minimum cost; among equal-cost
//! optima each is deterministic for a fixed edge order.

mod cost_scaling;
pub mod dimacs;
mod ssp;

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McmfError {
    #[error("malformed network: {0}")]
    MalformedNetwork(String),
}

pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    vertices: usize,
    source: usize,
    sink: usize,
    edges: Vec<Edge>,
}

impl FlowNetwork {
    pub fn new(vertices: usize, source: usize, sink: usize) -> Self {
        Self {
            vertices,
            source,
            sink,
            edges: Vec::new(),
        }
    }

    pub fn add_vertex(&mut self) -> usize {
        self.vertices += 1;
        self.vertices - 1
    }

    /// Appends an edge. Bounds and signs are checked by [`validate`](Self::validate).
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: i64, cost: i64) -> EdgeId {
        self.edges.push(Edge {
            from,
            to,
            capacity,
            cost,
        });
        self.edges.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn validate(&self) -> Result<(), McmfError> {
        let bad = |m: String| Err(McmfError::MalformedNetwork(m));
        if self.source >= self.vertices || self.sink >= self.vertices {
            return bad(format!(
                "source {} / sink {} outside 0..{}",
                self.source, self.sink, self.vertices
            ));
        }
        if self.source == self.sink {
            return bad("source equals sink".into());
        }
        for (id, e) in self.edges.iter().enumerate() {
            if e.from >= self.vertices || e.to >= self.vertices {
                return bad(format!("edge {id} references a missing vertex"));
            }
            if e.capacity < 0 {
                return bad(format!("edge {id} has negative capacity {}", e.capacity));
            }
            if e.cost < 0 {
                return bad(format!("edge {id} has negative cost {}", e.cost));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow on each edge, indexed by [`EdgeId`].
    pub flow: Vec<i64>,
    pub total_flow: i64,
    pub total_cost: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    SuccessiveShortestPath,
    CostScaling,
}

/// Maximum flow of minimum cost via successive shortest paths.
pub fn solve(net: &FlowNetwork) -> Result<FlowResult, McmfError> {
    solve_with(net, Algorithm::default())
}

pub fn solve_with(net: &FlowNetwork, algorithm: Algorithm) -> Result<FlowResult, McmfError> {
    net.validate()?;
    let flow = match algorithm {
        Algorithm::SuccessiveShortestPath => ssp::run(net),
        Algorithm::CostScaling => cost_scaling::run(net),
    };
    Ok(finish(net, flow))
}

fn finish(net: &FlowNetwork, flow: Vec<i64>) -> FlowResult {
    let total_cost = net.edges.iter().zip(&flow).map(|(e, f)| e.cost * f).sum();
    let total_flow = net_outflow(net, &flow, net.source);
    FlowResult {
        flow,
        total_flow,
        total_cost,
    }
}

fn net_outflow(net: &FlowNetwork, flow: &[i64], v: usize) -> i64 {
    net.edges
        .iter()
        .zip(flow)
        .map(|(e, &f)| {
            if e.from == v && e.to != v {
                f
            } else if e.to == v && e.from != v {
                -f
            } else {
                0
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EdgeCount {
        expected: usize,
        actual: usize,
    },
    NegativeFlow {
        edge: EdgeId,
        flow: i64,
    },
    Capacity {
        edge: EdgeId,
        flow: i64,
        capacity: i64,
    },
    Conservation {
        vertex: usize,
        inflow: i64,
        outflow: i64,
    },
    FlowValue {
        reported: i64,
        actual: i64,
    },
    Cost {
        reported: i64,
        actual: i64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EdgeCount { expected, actual } => {
                write!(
                    f,
                    "flow vector has {actual} entries, network has {expected} edges"
                )
            }
            Violation::NegativeFlow { edge, flow } => {
                write!(f, "edge {edge}: negative flow {flow}")
            }
            Violation::Capacity {
                edge,
                flow,
                capacity,
            } => write!(f, "edge {edge}: flow {flow} exceeds capacity {capacity}"),
            Violation::Conservation {
                vertex,
                inflow,
                outflow,
            } => write!(f, "vertex {vertex}: inflow {inflow} != outflow {outflow}"),
            Violation::FlowValue { reported, actual } => {
                write!(f, "reported flow value {reported}, actual {actual}")
            }
            Violation::Cost { reported, actual } => {
                write!(f, "reported cost {reported}, actual {actual}")
            }
        }
    }
}

/// Checks capacity and conservation constraints plus the reported flow
/// value and cost. Empty output means the flow is valid.
pub fn verify(net: &FlowNetwork, result: &FlowResult) -> Vec<Violation> {
    let mut out = Vec::new();
    if result.flow.len() != net.edges.len() {
        out.push(Violation::EdgeCount {
            expected: net.edges.len(),
            actual: result.flow.len(),
        });
        return out;
    }
    let mut inflow = vec![0i64; net.vertices];
    let mut outflow = vec![0i64; net.vertices];
    for (id, (e, &f)) in net.edges.iter().zip(&result.flow).enumerate() {
        if f < 0 {
            out.push(Violation::NegativeFlow { edge: id, flow: f });
        }
        if f > e.capacity {
            out.push(Violation::Capacity {
                edge: id,
                flow: f,
                capacity: e.capacity,
            });
        }
        outflow[e.from] += f;
        inflow[e.to] += f;
    }
    for v in 0..net.vertices {
        if v != net.source && v != net.sink && inflow[v] != outflow[v] {
            out.push(Violation::Conservation {
                vertex: v,
                inflow: inflow[v],
                outflow: outflow[v],
            });
        }
    }
    let actual = net_outflow(net, &result.flow, net.source);
    if actual != result.total_flow {
        out.push(Violation::FlowValue {
            reported: result.total_flow,
            actual,
        });
    }
    let cost: i64 = net
        .edges
        .iter()
        .zip(&result.flow)
        .map(|(e, f)| e.cost * f)
        .sum();
    if cost != result.total_cost {
        out.push(Violation::Cost {
            reported: result.total_cost,
            actual: cost,
        });
    }
    out
}

/// Residual graph shared by both solvers. Arc `2e` is edge `e` forward,
/// arc `2e + 1` its reverse.
pub(crate) struct Residual {
    pub head: Vec<usize>,
    pub residual: Vec<i64>,
    pub adjacency: Vec<Vec<usize>>,
}

impl Residual {
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut r = Residual {
            head: Vec::new(),
            residual: Vec::new(),
            adjacency: vec![Vec::new(); vertices],
        };
        for (from, to, cap) in edges {
            let id = r.head.len();
            r.head.push(to);
            r.residual.push(cap);
            r.adjacency[from].push(id);
            r.head.push(from);
            r.residual.push(0);
            r.adjacency[to].push(id + 1);
        }
        r
    }

    pub fn push(&mut self, arc: usize, amount: i64) {
        self.residual[arc] -= amount;
        self.residual[arc ^ 1] += amount;
    }

    /// Flow on original edge `e` (the reverse arc's residual).
    pub fn flow(&self, e: usize) -> i64 {
        self.residual[2 * e + 1]
    }
}
