//! DIMACS min-cost-flow text for debugging fixtures.
//!
//! Export writes `p min`, one `n` line per terminal (source supply is the
//! sum of its outgoing capacities, the sink gets the negation) and
//! `a u v 0 cap cost` arc lines, all 1-based. Import accepts the same and
//! takes the positive-supply node as source and the negative one as sink.

use std::fmt::Write as _;

use super::{FlowNetwork, McmfError};

pub fn to_dimacs(net: &FlowNetwork) -> String {
    let supply: i64 = net
        .edges()
        .iter()
        .filter(|e| e.from == net.source())
        .map(|e| e.capacity)
        .sum();
    let mut out = String::new();
    out.push_str("c min-cost max-flow instance\n");
    let _ = writeln!(out, "p min {} {}", net.vertex_count(), net.edge_count());
    let _ = writeln!(out, "n {} {}", net.source() + 1, supply);
    let _ = writeln!(out, "n {} {}", net.sink() + 1, -supply);
    for e in net.edges() {
        let _ = writeln!(
            out,
            "a {} {} 0 {} {}",
            e.from + 1,
            e.to + 1,
            e.capacity,
            e.cost
        );
    }
    out
}

pub fn from_dimacs(text: &str) -> Result<FlowNetwork, McmfError> {
    let err = |line: usize, m: &str| McmfError::MalformedNetwork(format!("line {line}: {m}"));
    let mut vertices = None;
    let mut source = None;
    let mut sink = None;
    let mut arcs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut parts = line.split_whitespace();
        let nums = |parts: std::str::SplitWhitespace<'_>| -> Result<Vec<i64>, McmfError> {
            parts
                .map(|p| {
                    p.parse::<i64>()
                        .map_err(|_| err(lineno, "expected integer"))
                })
                .collect()
        };
        match parts.next() {
            None | Some("c") => {}
            Some("p") => {
                if parts.next() != Some("min") {
                    return Err(err(lineno, "expected `p min`"));
                }
                let v = nums(parts)?;
                if v.len() != 2 || v[0] < 2 {
                    return Err(err(lineno, "expected `p min <nodes> <arcs>`"));
                }
                vertices = Some(v[0] as usize);
            }
            Some("n") => {
                let v = nums(parts)?;
                if v.len() != 2 || v[0] < 1 {
                    return Err(err(lineno, "expected `n <id> <supply>`"));
                }
                let id = v[0] as usize - 1;
                match v[1].signum() {
                    1 => source = Some(id),
                    -1 => sink = Some(id),
                    _ => {}
                }
            }
            Some("a") => {
                let v = nums(parts)?;
                if v.len() != 5 || v[0] < 1 || v[1] < 1 {
                    return Err(err(lineno, "expected `a <u> <v> <low> <cap> <cost>`"));
                }
                if v[2] != 0 {
                    return Err(err(lineno, "lower bounds are not supported"));
                }
                arcs.push((v[0] as usize - 1, v[1] as usize - 1, v[3], v[4]));
            }
            Some(other) => return Err(err(lineno, &format!("unknown line type `{other}`"))),
        }
    }
    let vertices = vertices.ok_or_else(|| err(0, "missing problem line"))?;
    let source = source.ok_or_else(|| err(0, "no supply node"))?;
    let sink = sink.ok_or_else(|| err(0, "no demand node"))?;
    let mut net = FlowNetwork::new(vertices, source, sink);
    for (u, v, cap, cost) in arcs {
        net.add_edge(u, v, cap, cost);
    }
    net.validate()?;
    Ok(net)
}
