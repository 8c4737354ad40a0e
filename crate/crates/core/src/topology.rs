//! Router graph, role assignment and hop-count weights.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Server,
    Client,
    Transport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub location_id: String,
    pub role: Role,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("topology line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("topology line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("topology line {line}: node `{name}` declared twice")]
    DuplicateNode { line: usize, name: String },
    #[error("topology: self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("topology: duplicate edge `{0}`–`{1}`")]
    DuplicateEdge(String, String),
    #[error("topology has no nodes")]
    Empty,
    #[error("topology is disconnected into {} components: {}", .0.len(), describe_components(.0))]
    Disconnected(Vec<Vec<String>>),
    #[error("cannot place {servers} servers and {clients} clients on {nodes} nodes")]
    RoleCounts {
        servers: usize,
        clients: usize,
        nodes: usize,
    },
    #[error("node {0} is not a neighbour of node {1}")]
    NotNeighbor(NodeId, NodeId),
}

fn describe_components(components: &[Vec<String>]) -> String {
    components
        .iter()
        .map(|c| {
            if c.len() <= 5 {
                format!("{{{}}}", c.join(", "))
            } else {
                format!("{{{}, … {} nodes}}", c[..5].join(", "), c.len())
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// An undirected, connected, simple graph of routers.
///
/// Node ids are dense indices in declaration order. Neighbour lists are kept
/// sorted, and a router's line-cards are numbered in neighbour-list order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    nodes: Vec<Node>,
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
}

impl Topology {
    /// Builds a topology from `(name, location)` pairs and index edges. All
    /// nodes start as transport routers.
    pub fn new(
        nodes: Vec<(String, String)>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        let n = nodes.len();
        let nodes: Vec<Node> = nodes
            .into_iter()
            .map(|(name, location_id)| Node {
                name,
                location_id,
                role: Role::Transport,
            })
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        let mut edge_list = Vec::new();
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b {
                return Err(TopologyError::SelfLoop(nodes[a].name.clone()));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(TopologyError::DuplicateEdge(
                    nodes[key.0].name.clone(),
                    nodes[key.1].name.clone(),
                ));
            }
            adjacency[a].push(NodeId(b));
            adjacency[b].push(NodeId(a));
            edge_list.push((NodeId(key.0), NodeId(key.1)));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let topo = Self {
            nodes,
            adjacency,
            edges: edge_list,
        };
        let components = topo.components();
        if components.len() > 1 {
            return Err(TopologyError::Disconnected(
                components
                    .into_iter()
                    .map(|c| c.into_iter().map(|id| topo.nodes[id.0].name.clone()).collect())
                    .collect(),
            ));
        }
        Ok(topo)
    }

    fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![NodeId(start)];
            let mut queue = VecDeque::from([NodeId(start)]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u.0] {
                    if !seen[v.0] {
                        seen[v.0] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.0]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id.0].len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a.0].binary_search(&b).is_ok()
    }

    /// Index of the line-card on `router` that serves the link to `neighbor`.
    pub fn line_card(&self, router: NodeId, neighbor: NodeId) -> Option<usize> {
        self.adjacency[router.0].binary_search(&neighbor).ok()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn with_role(&self, role: Role) -> Vec<NodeId> {
        self.ids().filter(|&id| self.nodes[id.0].role == role).collect()
    }

    pub fn servers(&self) -> Vec<NodeId> {
        self.with_role(Role::Server)
    }

    pub fn clients(&self) -> Vec<NodeId> {
        self.with_role(Role::Client)
    }

    pub fn set_role(&mut self, id: NodeId, role: Role) {
        self.nodes[id.0].role = role;
    }

    /// Distinct location ids in first-seen order.
    pub fn locations(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.nodes
            .iter()
            .filter(|n| seen.insert(n.location_id.as_str()))
            .map(|n| n.location_id.clone())
            .collect()
    }
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    let text = std::fs::read_to_string(path)?;
    parse_topology(&text)
}

/// Parses `node <id> <location_id>` and `edge <id_a> <id_b>` lines. `#`
/// starts a comment.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.as_slice() {
            ["node", name, location] => {
                if names.insert(name.to_string(), nodes.len()).is_some() {
                    return Err(TopologyError::DuplicateNode {
                        line,
                        name: name.to_string(),
                    });
                }
                nodes.push((name.to_string(), location.to_string()));
            }
            ["edge", a, b] => {
                let lookup = |name: &str| {
                    names.get(name).copied().ok_or_else(|| TopologyError::UnknownNode {
                        line,
                        name: name.to_string(),
                    })
                };
                edges.push((lookup(a)?, lookup(b)?));
            }
            _ => {
                return Err(TopologyError::Malformed {
                    line,
                    reason: format!("expected `node <id> <location>` or `edge <a> <b>`, got `{content}`"),
                })
            }
        }
    }
    Topology::new(nodes, edges)
}

pub fn write_topology(mut w: impl Write, topo: &Topology) -> std::io::Result<()> {
    for node in &topo.nodes {
        writeln!(w, "node {} {}", node.name, node.location_id)?;
    }
    for (a, b) in &topo.edges {
        writeln!(w, "edge {} {}", topo.nodes[a.0].name, topo.nodes[b.0].name)?;
    }
    Ok(())
}

/// POP-structured graph resembling a router-level ISP map.
///
/// Routers are spread over `locations` POPs named `loc00`, `loc01`, … with
/// skewed sizes. A POP has one core router per six routers (at least one);
/// its cores are fully meshed and every other router uplinks to
/// `links_per_node` of them (fewer if the POP has fewer cores). POPs sit at
/// random points of the unit square. The backbone joins POPs along a minimum
/// spanning tree plus a link from every POP to its nearest POP not yet
/// adjacent; adjacent POPs are wired core to core, one link per core of the
/// smaller POP.
pub fn synthetic_isp(nodes: usize, locations: usize, links_per_node: usize, seed: u64) -> Topology {
    assert!(nodes >= 1 && locations >= 1 && links_per_node >= 1);
    let pops = locations.min(nodes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let weights: Vec<f64> = (0..pops).map(|_| 1.0 / (rng.random::<f64>() + 0.1)).collect();
    let total: f64 = weights.iter().sum();
    let mut sizes = vec![1usize; pops];
    for _ in pops..nodes {
        let mut x = rng.random::<f64>() * total;
        let mut p = 0;
        while p + 1 < pops && x >= weights[p] {
            x -= weights[p];
            p += 1;
        }
        sizes[p] += 1;
    }

    let mut names = Vec::with_capacity(nodes);
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let link = |a: usize, b: usize, edges: &mut HashSet<(usize, usize)>| {
        edges.insert((a.min(b), a.max(b)));
    };
    let mut cores: Vec<Vec<usize>> = Vec::with_capacity(pops);
    let width = (nodes - 1).to_string().len();
    for (p, &size) in sizes.iter().enumerate() {
        let first = names.len();
        let n_cores = 1 + size / 6;
        let pop_cores: Vec<usize> = (first..first + n_cores).collect();
        for i in first..first + size {
            names.push((format!("r{i:0width$}"), format!("loc{p:02}")));
        }
        for (k, &a) in pop_cores.iter().enumerate() {
            for &b in &pop_cores[k + 1..] {
                link(a, b, &mut edges);
            }
        }
        for r in first + n_cores..first + size {
            let mut choice = pop_cores.clone();
            for _ in 0..links_per_node.min(n_cores) {
                let c = choice.swap_remove(rng.random_range(0..choice.len()));
                link(r, c, &mut edges);
            }
        }
        cores.push(pop_cores);
    }

    let pos: Vec<(f64, f64)> = (0..pops).map(|_| (rng.random(), rng.random())).collect();
    let dist = |a: usize, b: usize| ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();
    let mut backbone: HashSet<(usize, usize)> = HashSet::new();
    let mut in_tree = vec![false; pops];
    in_tree[0] = true;
    for _ in 1..pops {
        let (a, b) = (0..pops)
            .filter(|&a| in_tree[a])
            .flat_map(|a| (0..pops).filter(|&b| !in_tree[b]).map(move |b| (a, b)))
            .min_by(|x, y| dist(x.0, x.1).total_cmp(&dist(y.0, y.1)))
            .expect("some POP is outside the tree");
        in_tree[b] = true;
        backbone.insert((a.min(b), a.max(b)));
    }
    for a in 0..pops {
        let nearest = (0..pops)
            .filter(|&b| b != a && !backbone.contains(&(a.min(b), a.max(b))))
            .min_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)));
        if let Some(b) = nearest {
            backbone.insert((a.min(b), a.max(b)));
        }
    }
    let mut backbone: Vec<(usize, usize)> = backbone.into_iter().collect();
    backbone.sort();
    for (a, b) in backbone {
        let offset = rng.random_range(0..cores[b].len());
        for i in 0..cores[a].len().min(cores[b].len()) {
            let cb = cores[b][(i + offset) % cores[b].len()];
            link(cores[a][i], cb, &mut edges);
        }
    }

    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort();
    Topology::new(names, edges).expect("POP graph is connected and simple")
}

/// Tags the `n_servers` highest-degree routers as server-attached and the
/// `n_clients` lowest-degree routers as client-attached. Ties go to the
/// smaller node id.
pub fn assign_roles(topo: &Topology, n_servers: usize, n_clients: usize) -> Result<Topology, TopologyError> {
    let n = topo.len();
    if n_servers + n_clients > n {
        return Err(TopologyError::RoleCounts {
            servers: n_servers,
            clients: n_clients,
            nodes: n,
        });
    }
    let mut out = topo.clone();
    for node in &mut out.nodes {
        node.role = Role::Transport;
    }
    let mut by_degree_desc: Vec<NodeId> = topo.ids().collect();
    by_degree_desc.sort_by(|a, b| topo.degree(*b).cmp(&topo.degree(*a)).then(a.cmp(b)));
    for &id in &by_degree_desc[..n_servers] {
        out.nodes[id.0].role = Role::Server;
    }
    let mut by_degree_asc: Vec<NodeId> = topo.ids().collect();
    by_degree_asc.sort_by(|a, b| topo.degree(*a).cmp(&topo.degree(*b)).then(a.cmp(b)));
    let mut placed = 0;
    for id in by_degree_asc {
        if placed == n_clients {
            break;
        }
        if out.nodes[id.0].role == Role::Transport {
            out.nodes[id.0].role = Role::Client;
            placed += 1;
        }
    }
    Ok(out)
}

/// BFS hop counts from every router to one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopWeights {
    pub destination: NodeId,
    weights: Vec<u32>,
}

impl HopWeights {
    pub fn weight(&self, node: NodeId) -> u32 {
        self.weights[node.0]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.weights
    }

    /// `(min, max)` of the weights of `node`'s neighbours.
    pub fn neighbor_range(&self, topo: &Topology, node: NodeId) -> (u32, u32) {
        topo.neighbors(node)
            .iter()
            .map(|k| self.weights[k.0])
            .fold((u32::MAX, 0), |(lo, hi), w| (lo.min(w), hi.max(w)))
    }
}

pub fn hop_weights(topo: &Topology, destination: NodeId) -> HopWeights {
    let mut weights = vec![u32::MAX; topo.len()];
    weights[destination.0] = 0;
    let mut queue = VecDeque::from([destination]);
    while let Some(u) = queue.pop_front() {
        let next = weights[u.0] + 1;
        for &v in topo.neighbors(u) {
            if weights[v.0] == u32::MAX {
                weights[v.0] = next;
                queue.push_back(v);
            }
        }
    }
    HopWeights { destination, weights }
}

/// Normalised hop count of neighbour `j` as seen from `i`:
/// `(max_k w(k) − w(j)) / (max_k w(k) − min_k w(k))` over `i`'s neighbours.
/// When every neighbour is equally far the value is 1.
pub fn normalized_hop(topo: &Topology, weights: &HopWeights, i: NodeId, j: NodeId) -> Result<f64, TopologyError> {
    if !topo.are_adjacent(i, j) {
        return Err(TopologyError::NotNeighbor(j, i));
    }
    let (lo, hi) = weights.neighbor_range(topo, i);
    Ok(normalized_hop_from_range(lo, hi, weights.weight(j)))
}

pub(crate) fn normalized_hop_from_range(lo: u32, hi: u32, w: u32) -> f64 {
    if hi == lo {
        1.0
    } else {
        f64::from(hi - w) / f64::from(hi - lo)
    }
}

/// A shortest path from `from` to `to`, preferring smaller node ids at each step.
pub fn bfs_path(topo: &Topology, from: NodeId, to: NodeId) -> Vec<NodeId> {
    let weights = hop_weights(topo, to);
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        let w = weights.weight(cur);
        cur = *topo
            .neighbors(cur)
            .iter()
            .find(|v| weights.weight(**v) + 1 == w)
            .expect("connected graph has a descending neighbour");
        path.push(cur);
    }
    path
}
