//! Renewable-aware gradient routing.
//!
//! A discovery packet walks from a client router towards a server router,
//! at each hop taking the eligible neighbour with the highest gradient
//! `α·g(j) + (1−α)·h(j)`, where `g` is the neighbour's green ratio and `h` its
//! normalised hop count towards the destination. Each router keeps, per
//! discovery, the neighbours it received the packet from (`q_in`) and the
//! neighbours it sent it to (`q_out`); a router with no eligible neighbour
//! sends the packet back the way it came.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::topology::{hop_weights, normalized_hop_from_range, HopWeights, NodeId, Topology};

/// `α·g + (1−α)·h`.
pub fn gradient(alpha: f64, green_ratio: f64, normalized_hop: f64) -> f64 {
    alpha * green_ratio + (1.0 - alpha) * normalized_hop
}

/// Gradient of the link `from → to` towards a fixed destination.
pub trait GradientSource {
    fn gradient(&self, from: NodeId, to: NodeId) -> f64;
}

/// Green ratios of every router plus the α weighting; combined with a
/// destination's [`HopWeights`] it yields the gradient of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    alpha: f64,
    green: Vec<f64>,
}

impl GradientField {
    pub fn new(alpha: f64, green: Vec<f64>) -> Self {
        assert!((0.0..=1.0).contains(&alpha), "alpha {alpha} outside [0,1]");
        Self { alpha, green }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn green(&self, node: NodeId) -> f64 {
        self.green[node.0]
    }

    pub fn green_ratios(&self) -> &[f64] {
        &self.green
    }

    pub fn toward<'a>(&'a self, topo: &'a Topology, weights: &'a HopWeights) -> DestinationField<'a> {
        DestinationField {
            field: self,
            topo,
            weights,
        }
    }
}

/// A [`GradientField`] bound to one destination.
#[derive(Debug, Clone, Copy)]
pub struct DestinationField<'a> {
    field: &'a GradientField,
    topo: &'a Topology,
    weights: &'a HopWeights,
}

impl GradientSource for DestinationField<'_> {
    fn gradient(&self, from: NodeId, to: NodeId) -> f64 {
        let (lo, hi) = self.weights.neighbor_range(self.topo, from);
        let h = normalized_hop_from_range(lo, hi, self.weights.weight(to));
        gradient(self.field.alpha, self.field.green[to.0], h)
    }
}

/// Explicit per-link gradients. Links not in the table have gradient 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientTable {
    links: HashMap<(NodeId, NodeId), f64>,
}

impl GradientTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: NodeId, to: NodeId, value: f64) -> &mut Self {
        self.links.insert((from, to), value);
        self
    }
}

impl GradientSource for GradientTable {
    fn gradient(&self, from: NodeId, to: NodeId) -> f64 {
        self.links.get(&(from, to)).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    InProgress,
    Found,
    Failed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct NodeQueues {
    q_in: Vec<NodeId>,
    q_out: Vec<NodeId>,
}

/// Per-router discovery state for one (source, destination) discovery.
#[derive(Debug, Clone)]
pub struct DiscoverySession {
    source: NodeId,
    destination: NodeId,
    queues: HashMap<NodeId, NodeQueues>,
    status: SessionStatus,
}

impl DiscoverySession {
    pub fn new(source: NodeId, destination: NodeId) -> Self {
        Self {
            source,
            destination,
            queues: HashMap::new(),
            status: SessionStatus::InProgress,
        }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// `(q_in, q_out)` at `node`, if the discovery has touched it.
    pub fn queues(&self, node: NodeId) -> Option<(&[NodeId], &[NodeId])> {
        self.queues.get(&node).map(|q| (q.q_in.as_slice(), q.q_out.as_slice()))
    }

    /// Ends the session and drops the per-router lists.
    pub fn finish(&mut self, status: SessionStatus) {
        self.status = status;
        self.queues.clear();
    }

    /// Picks the next hop at `current` for a packet that arrived from
    /// `incoming` (none at the source).
    ///
    /// The highest-gradient neighbour outside `q_in ∪ q_out` wins, smaller id
    /// on ties. With no such neighbour the router backtracks: it pops `q_in`
    /// until it finds a neighbour it has not already sent to. `None` means the
    /// lists are exhausted.
    pub fn next_hop<G: GradientSource + ?Sized>(
        &mut self,
        topo: &Topology,
        current: NodeId,
        incoming: Option<NodeId>,
        gradients: &G,
    ) -> Option<NodeId> {
        let q = self.queues.entry(current).or_default();
        if let Some(from) = incoming {
            if !q.q_in.contains(&from) {
                q.q_in.push(from);
            }
        }

        let mut next = None;
        let mut best = -1.0;
        for &v in topo.neighbors(current) {
            if q.q_in.contains(&v) || q.q_out.contains(&v) {
                continue;
            }
            let g = gradients.gradient(current, v);
            if g > best {
                best = g;
                next = Some(v);
            }
        }

        if next.is_none() {
            while let Some(back) = q.q_in.pop() {
                if !q.q_out.contains(&back) {
                    next = Some(back);
                    break;
                }
            }
        }

        if let Some(v) = next {
            q.q_out.push(v);
        }
        next
    }

    /// Records a forced step from `current` back to `to` (see [`discover`]).
    fn force_step(&mut self, current: NodeId, to: NodeId) {
        let q = self.queues.entry(current).or_default();
        if !q.q_out.contains(&to) {
            q.q_out.push(to);
        }
    }
}

/// Loop-free router sequence from source to destination.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutePath(Vec<NodeId>);

impl RoutePath {
    /// Wraps `nodes`, checking adjacency and that no router repeats.
    pub fn new(topo: &Topology, nodes: Vec<NodeId>) -> Option<Self> {
        if nodes.is_empty() || !nodes.windows(2).all(|w| topo.are_adjacent(w[0], w[1])) {
            return None;
        }
        let mut seen = vec![false; topo.len()];
        for n in &nodes {
            if std::mem::replace(&mut seen[n.0], true) {
                return None;
            }
        }
        Some(Self(nodes))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn hops(&self) -> usize {
        self.0.len() - 1
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    pub fn destination(&self) -> NodeId {
        self.0[self.0.len() - 1]
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum DiscoveryFailure {
    #[error("discovery backtracked to the source with nowhere left to go")]
    Exhausted,
    #[error("discovery used up its hop budget")]
    BudgetExceeded,
}

/// Result of a discovery walk together with every router the packet visited.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryTrace {
    pub result: Result<RoutePath, DiscoveryFailure>,
    pub visited: Vec<NodeId>,
}

/// Default bound on discovery packet hops: four per router.
pub fn default_hop_budget(topo: &Topology) -> usize {
    4 * topo.len()
}

/// Runs a discovery from `source` to `destination`.
///
/// The adopted path is the walk with backtracked detours cut out: whenever
/// the packet steps to a router already on the path, the path is truncated
/// back to that router. If an intermediate router runs out of both eligible
/// neighbours and `q_in` entries, the packet steps back to its predecessor on
/// the current path, so only the source can exhaust a discovery.
pub fn discover<G: GradientSource + ?Sized>(
    topo: &Topology,
    gradients: &G,
    source: NodeId,
    destination: NodeId,
    hop_budget: usize,
) -> Result<RoutePath, DiscoveryFailure> {
    discover_traced(topo, gradients, source, destination, hop_budget).result
}

pub fn discover_traced<G: GradientSource + ?Sized>(
    topo: &Topology,
    gradients: &G,
    source: NodeId,
    destination: NodeId,
    hop_budget: usize,
) -> DiscoveryTrace {
    assert_ne!(source, destination, "discovery needs distinct endpoints");
    let mut session = DiscoverySession::new(source, destination);
    let mut path = vec![source];
    let mut visited = vec![source];
    let mut current = source;
    let mut incoming = None;
    let mut hops = 0;
    let result = loop {
        if current == destination {
            session.finish(SessionStatus::Found);
            break Ok(RoutePath(path));
        }
        if hops == hop_budget {
            session.finish(SessionStatus::Failed);
            break Err(DiscoveryFailure::BudgetExceeded);
        }
        let next = match session.next_hop(topo, current, incoming, gradients) {
            Some(v) => v,
            None if current == source => {
                session.finish(SessionStatus::Failed);
                break Err(DiscoveryFailure::Exhausted);
            }
            None => {
                let back = path[path.len() - 2];
                session.force_step(current, back);
                back
            }
        };
        hops += 1;
        match path.iter().position(|&n| n == next) {
            Some(pos) => path.truncate(pos + 1),
            None => path.push(next),
        }
        visited.push(next);
        incoming = Some(current);
        current = next;
    };
    DiscoveryTrace { result, visited }
}

/// Hop weights towards every destination that discoveries may target.
#[derive(Debug, Clone, Default)]
pub struct HopTable {
    weights: BTreeMap<NodeId, HopWeights>,
}

impl HopTable {
    pub fn for_destinations(topo: &Topology, destinations: impl IntoIterator<Item = NodeId>) -> Self {
        let weights = destinations.into_iter().map(|d| (d, hop_weights(topo, d))).collect();
        Self { weights }
    }

    pub fn get(&self, destination: NodeId) -> Option<&HopWeights> {
        self.weights.get(&destination)
    }

    /// Weights for `destination`, computed on first use.
    pub fn get_or_insert(&mut self, topo: &Topology, destination: NodeId) -> &HopWeights {
        self.weights
            .entry(destination)
            .or_insert_with(|| hop_weights(topo, destination))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefreshReport {
    pub discovered: usize,
    pub changed: usize,
    pub failed: usize,
}

/// Adopted path per (client, server) pair.
#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    paths: BTreeMap<(NodeId, NodeId), RoutePath>,
    failed_discoveries: u64,
}

impl RouteTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn path(&self, source: NodeId, destination: NodeId) -> Option<&RoutePath> {
        self.paths.get(&(source, destination))
    }

    pub fn paths(&self) -> impl Iterator<Item = &RoutePath> {
        self.paths.values()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn failed_discoveries(&self) -> u64 {
        self.failed_discoveries
    }

    /// Re-runs discovery for every pair under `field`. A pair whose discovery
    /// fails keeps its previous path (if any) and counts as a failure.
    pub fn refresh(
        &mut self,
        topo: &Topology,
        field: &GradientField,
        hops: &HopTable,
        pairs: &[(NodeId, NodeId)],
        hop_budget: usize,
    ) -> RefreshReport {
        let run = |&(s, d): &(NodeId, NodeId)| {
            let weights = hops.get(d).expect("hop weights precomputed for every destination");
            discover(topo, &field.toward(topo, weights), s, d, hop_budget)
        };
        #[cfg(feature = "parallel")]
        let results: Vec<_> = {
            use rayon::prelude::*;
            pairs.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<_> = pairs.iter().map(run).collect();

        let mut report = RefreshReport::default();
        for (&pair, result) in pairs.iter().zip(results) {
            match result {
                Ok(path) => {
                    report.discovered += 1;
                    if self.paths.get(&pair) != Some(&path) {
                        report.changed += 1;
                    }
                    self.paths.insert(pair, path);
                }
                Err(_) => {
                    report.failed += 1;
                    self.failed_discoveries += 1;
                }
            }
        }
        report
    }
}
