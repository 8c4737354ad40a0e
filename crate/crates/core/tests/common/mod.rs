#![allow(dead_code)]

use greenroute::routing::{
    default_hop_budget, discover, discover_traced, DiscoveryFailure, GradientSource, GradientTable,
};
use greenroute::topology::{parse_topology, NodeId, Topology};
use rand::Rng;

/// Random connected graph: a random tree plus each remaining pair with
/// probability `extra`.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, extra: f64) -> Topology {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.random_bool(extra) {
                edges.push((a, b));
            }
        }
    }
    let names = (0..n).map(|i| (format!("n{i}"), "x".to_string())).collect();
    Topology::new(names, edges).unwrap()
}

/// Plain adjacency lists, ascending.
pub fn adjacency(topo: &Topology) -> Vec<Vec<usize>> {
    topo.ids()
        .map(|u| {
            let mut v: Vec<usize> = topo.neighbors(u).iter().map(|x| x.0).collect();
            v.sort();
            v
        })
        .collect()
}

/// BFS distances to `d` computed from scratch.
pub fn distances(adj: &[Vec<usize>], d: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[d] = 0;
    let mut frontier = vec![d];
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = level;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    dist
}

#[derive(Debug, PartialEq)]
pub enum Outcome {
    Path(Vec<usize>),
    Exhausted,
    Budget,
}

pub fn excise(walk: &[usize]) -> Vec<usize> {
    let mut p: Vec<usize> = Vec::new();
    for &x in walk {
        match p.iter().position(|&y| y == x) {
            Some(pos) => p.truncate(pos + 1),
            None => p.push(x),
        }
    }
    p
}

/// Step-by-step transcription of the next-hop selection, kept apart from the
/// library code: per-router `q_in`/`q_out` lists, strict `>` over neighbours
/// in ascending order, pop-until-unsent backtracking, and a forced step back
/// along the current path when an intermediate router has nothing left.
pub fn reference_walk(
    adj: &[Vec<usize>],
    grad: &dyn Fn(usize, usize) -> f64,
    s: usize,
    d: usize,
    budget: usize,
) -> (Outcome, Vec<usize>) {
    let n = adj.len();
    let mut q_in: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut q_out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut u = s;
    let mut incoming: Option<usize> = None;
    let mut walk = vec![s];
    loop {
        if u == d {
            return (Outcome::Path(excise(&walk)), walk);
        }
        if walk.len() - 1 == budget {
            return (Outcome::Budget, walk);
        }
        if let Some(x) = incoming {
            if !q_in[u].contains(&x) {
                q_in[u].push(x);
            }
        }
        let mut next_hop = None;
        let mut best_g = -1.0;
        for &v in &adj[u] {
            if !q_in[u].contains(&v) && !q_out[u].contains(&v) && grad(u, v) > best_g {
                best_g = grad(u, v);
                next_hop = Some(v);
            }
        }
        if next_hop.is_none() {
            while let Some(x) = q_in[u].pop() {
                if !q_out[u].contains(&x) {
                    next_hop = Some(x);
                    break;
                }
            }
        }
        if let Some(x) = next_hop {
            q_out[u].push(x);
        }
        let step = match next_hop {
            Some(x) => x,
            None if u == s => return (Outcome::Exhausted, walk),
            None => {
                let p = excise(&walk);
                let back = p[p.len() - 2];
                if !q_out[u].contains(&back) {
                    q_out[u].push(back);
                }
                back
            }
        };
        walk.push(step);
        incoming = Some(u);
        u = step;
    }
}

pub fn library_walk<G: GradientSource>(
    topo: &Topology,
    g: &G,
    s: usize,
    d: usize,
    budget: usize,
) -> (Outcome, Vec<usize>) {
    let trace = discover_traced(topo, g, NodeId(s), NodeId(d), budget);
    let outcome = match trace.result {
        Ok(p) => Outcome::Path(p.nodes().iter().map(|x| x.0).collect()),
        Err(DiscoveryFailure::Exhausted) => Outcome::Exhausted,
        Err(DiscoveryFailure::BudgetExceeded) => Outcome::Budget,
    };
    (outcome, trace.visited.iter().map(|x| x.0).collect())
}

/// Gradient recomputed from BFS distances, independent of `HopWeights`.
pub fn field_gradient(adj: &[Vec<usize>], dist: &[u32], alpha: f64, green: &[f64], i: usize, j: usize) -> f64 {
    let ws: Vec<u32> = adj[i].iter().map(|&k| dist[k]).collect();
    let (lo, hi) = (*ws.iter().min().unwrap(), *ws.iter().max().unwrap());
    let h = if hi == lo {
        1.0
    } else {
        (hi - dist[j]) as f64 / (hi - lo) as f64
    };
    alpha * green[j] + (1.0 - alpha) * h
}

/// The 8-router walkthrough: source S, routers 1..6, destination D.
pub fn walkthrough() -> Topology {
    let mut text = String::from("node S x\n");
    for i in 1..=6 {
        text += &format!("node {i} x\n");
    }
    text += "node D x\n";
    for (a, b) in [
        ("S", "1"),
        ("1", "2"),
        ("2", "3"),
        ("3", "6"),
        ("6", "D"),
        ("5", "6"),
        ("5", "3"),
        ("4", "5"),
        ("4", "1"),
        ("4", "2"),
    ] {
        text += &format!("edge {a} {b}\n");
    }
    parse_topology(&text).unwrap()
}

pub fn names(topo: &Topology, path: &[NodeId]) -> Vec<String> {
    path.iter().map(|&n| topo.node(n).name.clone()).collect()
}

pub fn walkthrough_route(links: &[(&str, &str, f64)]) -> Vec<String> {
    let topo = walkthrough();
    let id = |s: &str| topo.find(s).unwrap();
    let mut table = GradientTable::new();
    // stepping onto the destination is always the steepest move
    table.set(id("6"), id("D"), 1.0);
    for &(a, b, g) in links {
        table.set(id(a), id(b), g);
    }
    let path = discover(&topo, &table, id("S"), id("D"), default_hop_budget(&topo)).unwrap();
    names(&topo, path.nodes())
}

/// Probability that at least one of `n` routers admits, by summing over all
/// 2^n coin outcomes with the header bit stopping later admissions.
pub fn enumerated_admission(n: u32) -> f64 {
    let q = 1.0 / f64::from(n);
    (0..1u32 << n)
        .map(|mask| {
            let mut bit = false;
            let mut p = 1.0;
            let mut admitted = false;
            for r in 0..n {
                let heads = mask & (1 << r) != 0;
                if bit {
                    // coin never drawn once the bit is set: count the mask once
                    if heads {
                        return 0.0;
                    }
                    continue;
                }
                p *= if heads { q } else { 1.0 - q };
                if heads {
                    bit = true;
                    admitted = true;
                }
            }
            if admitted {
                p
            } else {
                0.0
            }
        })
        .sum()
}
