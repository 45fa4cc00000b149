use std::collections::VecDeque;

use proptest::prelude::*;
use swarmflow::mcmf::{solve, solve_with, verify, Algorithm, FlowNetwork};

/// Exhaustive search over every partial injective worker -> unit assignment:
/// returns (max cardinality, min cost among maximum-cardinality ones).
fn brute_force(costs: &[Vec<Option<i64>>], units: usize) -> (i64, i64) {
    fn go(
        w: usize,
        costs: &[Vec<Option<i64>>],
        used: &mut Vec<bool>,
        card: i64,
        cost: i64,
        best: &mut (i64, i64),
    ) {
        if w == costs.len() {
            if card > best.0 || (card == best.0 && cost < best.1) {
                *best = (card, cost);
            }
            return;
        }
        go(w + 1, costs, used, card, cost, best);
        for u in 0..used.len() {
            if let (false, Some(c)) = (used[u], costs[w][u]) {
                used[u] = true;
                go(w + 1, costs, used, card + 1, cost + c, best);
                used[u] = false;
            }
        }
    }
    let mut best = (0, 0);
    go(0, costs, &mut vec![false; units], 0, 0, &mut best);
    best
}

fn bipartite(costs: &[Vec<Option<i64>>], units: usize) -> FlowNetwork {
    let m = costs.len();
    let (s, t) = (0, m + units + 1);
    let mut net = FlowNetwork::new(m + units + 2, s, t);
    for w in 0..m {
        net.add_edge(s, 1 + w, 1, 0);
    }
    for (w, row) in costs.iter().enumerate() {
        for (u, c) in row.iter().enumerate() {
            if let Some(c) = c {
                net.add_edge(1 + w, 1 + m + u, 1, *c);
            }
        }
    }
    for u in 0..units {
        net.add_edge(1 + m + u, t, 1, 0);
    }
    net
}

/// Plain BFS augmenting-path max flow, costs ignored.
fn edmonds_karp(net: &FlowNetwork) -> i64 {
    let n = net.vertex_count();
    let mut cap = vec![vec![0i64; n]; n];
    for e in net.edges() {
        cap[e.from][e.to] += e.capacity;
    }
    let (s, t) = (net.source(), net.sink());
    let mut total = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for w in 0..n {
                if prev[w] == usize::MAX && cap[v][w] > 0 {
                    prev[w] = v;
                    q.push_back(w);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut b = i64::MAX;
        let mut v = t;
        while v != s {
            b = b.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= b;
            cap[v][prev[v]] += b;
            v = prev[v];
        }
        total += b;
    }
}

fn cost_matrix(
    max_w: usize,
    max_u: usize,
) -> impl Strategy<Value = (Vec<Vec<Option<i64>>>, usize)> {
    (1..=max_w, 1..=max_u).prop_flat_map(|(m, k)| {
        (
            proptest::collection::vec(
                proptest::collection::vec(proptest::option::weighted(0.75, 0i64..50), k),
                m,
            ),
            Just(k),
        )
    })
}

fn general_network() -> impl Strategy<Value = FlowNetwork> {
    (3usize..9).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, 0i64..5, 0i64..20), 0..25).prop_map(move |edges| {
            let mut net = FlowNetwork::new(n, 0, n - 1);
            for (u, v, c, w) in edges {
                net.add_edge(u, v, c, w);
            }
            net
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bipartite_optimal_against_enumeration((costs, k) in cost_matrix(6, 6)) {
        let net = bipartite(&costs, k);
        let (card, cost) = brute_force(&costs, k);
        for alg in [Algorithm::SuccessiveShortestPath, Algorithm::CostScaling] {
            let r = solve_with(&net, alg).unwrap();
            prop_assert!(verify(&net, &r).is_empty());
            prop_assert_eq!((r.total_flow, r.total_cost), (card, cost), "{:?}", alg);
        }
    }

    #[test]
    fn general_networks_agree(net in general_network()) {
        let ssp = solve_with(&net, Algorithm::SuccessiveShortestPath).unwrap();
        let cs = solve_with(&net, Algorithm::CostScaling).unwrap();
        prop_assert!(verify(&net, &ssp).is_empty(), "{:?}", verify(&net, &ssp));
        prop_assert!(verify(&net, &cs).is_empty(), "{:?}", verify(&net, &cs));
        let max = edmonds_karp(&net);
        prop_assert_eq!(ssp.total_flow, max);
        prop_assert_eq!(cs.total_flow, max);
        prop_assert_eq!(ssp.total_cost, cs.total_cost);
    }

    #[test]
    fn solving_is_deterministic(net in general_network()) {
        prop_assert_eq!(solve(&net).unwrap(), solve(&net).unwrap());
    }
}
