use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{FlowNetwork, Residual};

const INF: i64 = i64::MAX / 4;

/// Successive shortest augmenting paths. Costs are non-negative, so zero
/// initial potentials keep every reduced cost non-negative and Dijkstra
/// applies from the first round.
pub(super) fn run(net: &FlowNetwork) -> Vec<i64> {
    let n = net.vertex_count();
    let (s, t) = (net.source(), net.sink());
    let mut g = Residual::new(n, net.edges().iter().map(|e| (e.from, e.to, e.capacity)));
    let cost: Vec<i64> = net.edges().iter().flat_map(|e| [e.cost, -e.cost]).collect();

    let mut potential = vec![0i64; n];
    let mut dist = vec![INF; n];
    let mut parent_arc = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();

    loop {
        dist.fill(INF);
        parent_arc.fill(usize::MAX);
        dist[s] = 0;
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &arc in &g.adjacency[v] {
                if g.residual[arc] <= 0 {
                    continue;
                }
                let w = g.head[arc];
                let nd = d + cost[arc] + potential[v] - potential[w];
                if nd < dist[w] {
                    dist[w] = nd;
                    parent_arc[w] = arc;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        if dist[t] == INF {
            break;
        }
        for v in 0..n {
            if dist[v] < INF {
                potential[v] += dist[v];
            }
        }

        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let arc = parent_arc[v];
            bottleneck = bottleneck.min(g.residual[arc]);
            v = g.head[arc ^ 1];
        }
        let mut v = t;
        while v != s {
            let arc = parent_arc[v];
            g.push(arc, bottleneck);
            v = g.head[arc ^ 1];
        }
    }

    (0..net.edge_count()).map(|e| g.flow(e)).collect()
}
