use std::collections::VecDeque;

use super::{FlowNetwork, Residual};

const SCALE_FACTOR: i128 = 8;

/// Cost-scaling push-relabel on a min-cost circulation.
///
/// The max-flow objective is folded into the circulation by a return arc
/// `t -> s` whose cost is minus a bound larger than any simple s-t path
/// cost, so every extra unit of s-t flow lowers the circulation cost.
/// Costs are multiplied by `n + 1`; an ε-optimal circulation with ε = 1 on
/// that grid is optimal for the original integer costs.
pub(super) fn run(net: &FlowNetwork) -> Vec<i64> {
    let n = net.vertex_count();
    let (s, t) = (net.source(), net.sink());
    let m = net.edge_count();

    let return_capacity: i64 = net
        .edges()
        .iter()
        .filter(|e| e.from == s && e.to != s)
        .map(|e| e.capacity)
        .sum();
    let path_bound: i128 = net.edges().iter().map(|e| e.cost as i128).sum::<i128>() + 1;

    let mut g = Residual::new(
        n,
        net.edges()
            .iter()
            .map(|e| (e.from, e.to, e.capacity))
            .chain(std::iter::once((t, s, return_capacity))),
    );
    let multiplier = n as i128 + 1;
    let mut cost: Vec<i128> = Vec::with_capacity(2 * (m + 1));
    for e in net.edges() {
        let c = e.cost as i128 * multiplier;
        cost.extend([c, -c]);
    }
    let back = -path_bound * multiplier;
    cost.extend([back, -back]);

    let mut potential = vec![0i128; n];
    let mut excess = vec![0i64; n];
    let mut current = vec![0usize; n];
    let mut active = vec![false; n];
    let mut queue = VecDeque::new();

    let mut epsilon = cost.iter().map(|c| c.abs()).max().unwrap_or(0);
    while epsilon > 1 {
        epsilon = (epsilon / SCALE_FACTOR).max(1);

        // saturate every residual arc with negative reduced cost
        for v in 0..n {
            for i in 0..g.adjacency[v].len() {
                let arc = g.adjacency[v][i];
                let w = g.head[arc];
                let r = g.residual[arc];
                if r > 0 && cost[arc] + potential[v] - potential[w] < 0 {
                    g.push(arc, r);
                    excess[v] -= r;
                    excess[w] += r;
                }
            }
        }
        current.fill(0);
        for v in 0..n {
            if excess[v] > 0 {
                active[v] = true;
                queue.push_back(v);
            }
        }

        while let Some(v) = queue.pop_front() {
            active[v] = false;
            // discharge
            while excess[v] > 0 {
                if current[v] == g.adjacency[v].len() {
                    // relabel: lower p(v) until the cheapest residual arc
                    // has reduced cost exactly -ε
                    let best = g.adjacency[v]
                        .iter()
                        .filter(|&&arc| g.residual[arc] > 0)
                        .map(|&arc| potential[g.head[arc]] - cost[arc])
                        .max()
                        .expect("vertex with excess has a residual arc");
                    potential[v] = best - epsilon;
                    current[v] = 0;
                    continue;
                }
                let arc = g.adjacency[v][current[v]];
                let w = g.head[arc];
                if g.residual[arc] > 0 && cost[arc] + potential[v] - potential[w] < 0 {
                    let delta = excess[v].min(g.residual[arc]);
                    g.push(arc, delta);
                    excess[v] -= delta;
                    excess[w] += delta;
                    if excess[w] > 0 && !active[w] {
                        active[w] = true;
                        queue.push_back(w);
                    }
                } else {
                    current[v] += 1;
                }
            }
        }
    }

    (0..m).map(|e| g.flow(e)).collect()
}
