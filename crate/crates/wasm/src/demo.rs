//! Everything the page asks for, as plain functions over serde types so it
//! can be exercised without a browser.

use std::f64::consts::TAU;

use greenroute::caching::Strategy;
use greenroute::energy::{average_green_ratio, size_from_profile, TurbinePowerCurve, UnitProfile};
use greenroute::experiment::{
    default_climates, Cell, ExperimentSection, Prepared, RunConfig, SyntheticTopology, SyntheticWeather,
    TopologySection, WeatherSection,
};
use greenroute::routing::{default_hop_budget, discover_traced, DiscoveryFailure, GradientField};
use greenroute::sim::{Network, Scenario};
use greenroute::topology::{bfs_path, hop_weights, NodeId, Topology};
use greenroute::weather::{synthesize_weather, Season, SeasonWindow, SyntheticProfile};
use serde::{Deserialize, Serialize};

/// The demo network: a small synthetic ISP over two weeks of weather.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub locations: usize,
    pub seed: u64,
    pub hours: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            nodes: 30,
            locations: 6,
            seed: 1,
            hours: 336,
        }
    }
}

impl NetworkSpec {
    fn config(&self, servers: usize, clients: usize) -> RunConfig {
        RunConfig {
            topology: TopologySection {
                path: None,
                synthetic: Some(SyntheticTopology {
                    nodes: self.nodes,
                    locations: self.locations,
                    links_per_node: 2,
                    seed: self.seed,
                }),
                servers,
                clients,
            },
            weather: WeatherSection {
                path: None,
                synthetic: Some(SyntheticWeather {
                    seed: self.seed,
                    horizon_hours: self.hours,
                    profiles: default_climates(),
                }),
            },
            experiment: ExperimentSection {
                seasons: vec![Season::Winter],
                windows: vec![SeasonWindow {
                    name: Season::Winter,
                    start_hour: 0,
                    length_hours: self.hours,
                }],
                seed: self.seed,
                ..ExperimentSection::default()
            },
            workload: Default::default(),
            cache: Default::default(),
            energy: Default::default(),
            simulation: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRequest {
    #[serde(default)]
    pub network: NetworkSpec,
    pub hour: usize,
    pub alpha: f64,
    pub source: usize,
    pub destination: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub name: String,
    pub location: String,
    pub x: f64,
    pub y: f64,
    pub green: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteView {
    pub nodes: Vec<NodeView>,
    pub edges: Vec<(usize, usize)>,
    /// Empty when discovery failed.
    pub path: Vec<usize>,
    /// Every router the discovery packet stepped on, in order.
    pub walk: Vec<usize>,
    pub shortest: Vec<usize>,
    pub mean_green: Option<f64>,
    pub failure: Option<String>,
}

/// POPs on a ring, routers on a small ring around their POP.
fn layout(topo: &Topology) -> Vec<(f64, f64)> {
    let locs = topo.locations();
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); locs.len()];
    for id in topo.ids() {
        let p = locs.iter().position(|l| *l == topo.node(id).location_id).unwrap();
        members[p].push(id);
    }
    let mut pos = vec![(0.5, 0.5); topo.len()];
    for (p, ids) in members.iter().enumerate() {
        let a = TAU * p as f64 / locs.len() as f64;
        let (cx, cy) = (0.5 + 0.36 * a.cos(), 0.5 + 0.36 * a.sin());
        let r = if ids.len() == 1 {
            0.0
        } else {
            0.04 + 0.006 * ids.len() as f64
        };
        for (k, id) in ids.iter().enumerate() {
            let b = TAU * k as f64 / ids.len() as f64;
            pos[id.0] = (cx + r * b.cos(), cy + r * b.sin());
        }
    }
    pos
}

fn demo_network(spec: &NetworkSpec) -> Result<(Prepared, Network), String> {
    let prepared = Prepared::new(spec.config(1, 1)).map_err(|e| e.to_string())?;
    let net = prepared.network(Scenario::A).map_err(|e| e.to_string())?;
    Ok((prepared, net))
}

/// One discovery on the demo network with green ratios taken at `hour`.
pub fn explore_route(req: &RouteRequest) -> Result<RouteView, String> {
    if !(0.0..=1.0).contains(&req.alpha) {
        return Err(format!("alpha {} outside [0,1]", req.alpha));
    }
    let (_, net) = demo_network(&req.network)?;
    let topo = &net.topo;
    let n = topo.len();
    if req.source >= n || req.destination >= n || req.source == req.destination {
        return Err(format!("source and destination must be distinct routers below {n}"));
    }
    let hour = req.hour.min(net.horizon() - 1);
    let green = net.all_on_green_ratios(hour);
    let field = GradientField::new(req.alpha, green.clone());
    let (s, d) = (NodeId(req.source), NodeId(req.destination));
    let weights = hop_weights(topo, d);
    let trace = discover_traced(topo, &field.toward(topo, &weights), s, d, default_hop_budget(topo));
    let (path, failure) = match trace.result {
        Ok(p) => (p.nodes().iter().map(|x| x.0).collect::<Vec<_>>(), None),
        Err(DiscoveryFailure::Exhausted) => (Vec::new(), Some("every neighbour of the source was tried".into())),
        Err(DiscoveryFailure::BudgetExceeded) => (Vec::new(), Some("hop budget exhausted".into())),
    };
    let mean_green = (!path.is_empty()).then(|| path.iter().map(|&i| green[i]).sum::<f64>() / path.len() as f64);
    let pos = layout(topo);
    Ok(RouteView {
        nodes: topo
            .ids()
            .map(|id| NodeView {
                name: topo.node(id).name.clone(),
                location: topo.node(id).location_id.clone(),
                x: pos[id.0].0,
                y: pos[id.0].1,
                green: green[id.0],
            })
            .collect(),
        edges: topo.edges().iter().map(|(a, b)| (a.0, b.0)).collect(),
        path,
        walk: trace.visited.iter().map(|x| x.0).collect(),
        shortest: bfs_path(topo, s, d).iter().map(|x| x.0).collect(),
        mean_green,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRequest {
    pub profile: SyntheticProfile,
    pub capacity_c: f64,
    #[serde(default = "one")]
    pub seed: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPoint {
    pub beta: f64,
    /// None where the site cannot host that share (no wind or no sun at all).
    pub avg_green_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixCurve {
    pub points: Vec<MixPoint>,
    pub best_beta: Option<f64>,
}

/// Mean green ratio over a synthetic year for every wind share on a 0.05 grid.
pub fn mix_curve(req: &MixRequest) -> Result<MixCurve, String> {
    let weather = synthesize_weather("site", req.seed, &req.profile, 8760).map_err(|e| e.to_string())?;
    let unit = UnitProfile::from_weather(&weather, &TurbinePowerCurve::hy5(), 4000.0);
    // a router with four line-cards
    let demand = 210.0 + 4.0 * 70.0;
    let mut points = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=20 {
        let beta = f64::from(i) / 20.0;
        let g = size_from_profile(beta, req.capacity_c, &unit, demand)
            .ok()
            .map(|s| average_green_ratio(&s, &unit, demand));
        if let Some(g) = g {
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((beta, g));
            }
        }
        points.push(MixPoint {
            beta,
            avg_green_ratio: g,
        });
    }
    Ok(MixCurve {
        points,
        best_beta: best.map(|b| b.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    #[serde(default)]
    pub network: NetworkSpec,
    pub strategy: Strategy,
    pub alphas: Vec<f64>,
    #[serde(default = "default_rate")]
    pub request_rate: u32,
    #[serde(default = "default_capacity")]
    pub cache_capacity: usize,
}

fn default_rate() -> u32 {
    30
}

fn default_capacity() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub hit_rate: Option<f64>,
    pub footprint_reduction: Option<f64>,
    pub brown_energy_savings: f64,
}

/// A one-strategy α sweep on the demo network.
pub fn alpha_sweep(req: &SweepRequest) -> Result<Vec<SweepRow>, String> {
    let mut config = req.network.config(3, 6);
    config.experiment.alphas = req.alphas.clone();
    config.experiment.strategies = vec![req.strategy];
    config.workload.request_rate = req.request_rate;
    config.workload.catalog_size = 5000;
    config.cache.capacity = req.cache_capacity;
    config.simulation.warmup_hours = (req.network.hours / 4).min(24);
    let prepared = Prepared::new(config).map_err(|e| e.to_string())?;
    let net = prepared.network(Scenario::A).map_err(|e| e.to_string())?;
    let window = prepared.windows[0];
    let baseline = prepared.baseline(&net, window).map_err(|e| e.to_string())?;
    req.alphas
        .iter()
        .enumerate()
        .map(|(alpha_index, &alpha)| {
            let cell = Cell {
                alpha_index,
                alpha,
                window,
                strategy: req.strategy,
                scenario: Scenario::A,
            };
            let (_, r) = prepared.run_cell(&net, &cell, &baseline).map_err(|e| e.to_string())?;
            Ok(SweepRow {
                alpha,
                hit_rate: r.summary.hit_rate,
                footprint_reduction: r.summary.footprint_reduction,
                brown_energy_savings: r.summary.brown_energy_savings.savings,
            })
        })
        .collect()
}
