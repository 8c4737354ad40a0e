//! Hour-by-hour network simulation: weather drives green ratios, green ratios
//! drive route discovery, requests flow over the adopted routes through the
//! caches, and unused line-cards are switched off for the energy accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caching::{
    matching_neighbors, rebuild_summary, select_neighbor, CacheError, CachePolicy, ChunkId, ChunkPacket, ContentStore,
    Lookup, NeighborSummary, Strategy,
};
use crate::energy::{
    baseline_brown_power, brown_power, default_beta_grid, green_ratio, optimal_beta_for_profile, power_demand,
    renewable_supply, EnergyError, InfrastructureSizing, MixChoice, PowerState, RenewableSupply, RouterEnergyProfile,
    TurbinePowerCurve, UnitProfile, DEFAULT_CHASSIS_W, DEFAULT_LINE_CARD_W, DEFAULT_PANEL_RATING_W,
};
use crate::routing::{default_hop_budget, GradientField, HopTable, RoutePath, RouteTable};
use crate::topology::{bfs_path, NodeId, Topology};
use crate::weather::{SeasonWindow, WeatherSet};
use crate::workload::{generate_requests, Catalog, WorkloadError};

/// Hours at the start of every window that summaries skip while caches fill.
pub const WARMUP_HOURS: usize = 24;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no weather series for location `{0}`")]
    MissingWeather(String),
    #[error("window {window} ends after the {horizon}-hour weather horizon")]
    WindowOutOfRange { window: String, horizon: usize },
    #[error("alpha {0} outside [0,1]")]
    InvalidAlpha(f64),
    #[error("topology has no {0} routers")]
    MissingRole(&'static str),
    #[error("catalog places chunks on router {0}, which is not a server")]
    PlacementMismatch(NodeId),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Every router's installed peak is twice its all-on demand.
    A,
    /// Installed peak drawn uniformly from zero to three times the demand.
    B,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            other => Err(format!("unknown scenario `{other}` (expected A or B)")),
        }
    }
}

/// Router hardware and renewable plant parameters shared by every router.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub chassis_w: f64,
    pub line_card_w: f64,
    pub curve: TurbinePowerCurve,
    pub panel_rating_w: f64,
    pub beta_grid: Vec<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            chassis_w: DEFAULT_CHASSIS_W,
            line_card_w: DEFAULT_LINE_CARD_W,
            curve: TurbinePowerCurve::hy5(),
            panel_rating_w: DEFAULT_PANEL_RATING_W,
            beta_grid: default_beta_grid(),
        }
    }
}

/// Peak-to-demand ratio per router, in node order.
pub fn scenario_capacities(scenario: Scenario, routers: usize, seed: u64) -> Vec<f64> {
    match scenario {
        Scenario::A => vec![2.0; routers],
        Scenario::B => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..routers).map(|_| rng.random_range(0.0..=3.0)).collect()
        }
    }
}

/// Sizes every router's plant for the scenario and picks its wind/solar mix
/// over the whole supplied weather series.
pub fn scenario_sizing(
    scenario: Scenario,
    topo: &Topology,
    weather: &WeatherSet,
    profiles: &[RouterEnergyProfile],
    energy: &EnergyConfig,
    seed: u64,
) -> Result<Vec<MixChoice>, SimError> {
    let capacities = scenario_capacities(scenario, topo.len(), seed);
    let mut units: BTreeMap<&str, UnitProfile> = BTreeMap::new();
    topo.ids()
        .map(|id| {
            let loc = topo.node(id).location_id.as_str();
            if !units.contains_key(loc) {
                let series = weather
                    .get(loc)
                    .ok_or_else(|| SimError::MissingWeather(loc.to_string()))?;
                units.insert(
                    loc,
                    UnitProfile::from_weather(series, &energy.curve, energy.panel_rating_w),
                );
            }
            let demand = profiles[id.0].all_on_demand();
            Ok(optimal_beta_for_profile(
                &units[loc],
                capacities[id.0],
                demand,
                &energy.beta_grid,
            )?)
        })
        .collect()
}

/// A topology with its routers' power profiles, plants and weather.
#[derive(Debug, Clone)]
pub struct Network {
    pub topo: Topology,
    pub profiles: Vec<RouterEnergyProfile>,
    pub mixes: Vec<MixChoice>,
    pub weather: WeatherSet,
    pub energy: EnergyConfig,
    location_index: Vec<String>,
}

impl Network {
    pub fn build(
        topo: Topology,
        weather: WeatherSet,
        scenario: Scenario,
        energy: EnergyConfig,
        seed: u64,
    ) -> Result<Self, SimError> {
        let profiles = topo
            .ids()
            .map(|id| RouterEnergyProfile::uniform(energy.chassis_w, energy.line_card_w, topo.degree(id)))
            .collect::<Result<Vec<_>, _>>()?;
        let mixes = scenario_sizing(scenario, &topo, &weather, &profiles, &energy, seed)?;
        Self::with_mixes(topo, weather, profiles, mixes, energy)
    }

    /// Assembles a network from explicit sizings.
    pub fn with_mixes(
        topo: Topology,
        weather: WeatherSet,
        profiles: Vec<RouterEnergyProfile>,
        mixes: Vec<MixChoice>,
        energy: EnergyConfig,
    ) -> Result<Self, SimError> {
        let location_index = topo
            .ids()
            .map(|id| topo.node(id).location_id.clone())
            .collect::<Vec<_>>();
        for loc in &location_index {
            if weather.get(loc).is_none() {
                return Err(SimError::MissingWeather(loc.clone()));
            }
        }
        for (id, p) in profiles.iter().enumerate() {
            if p.line_cards() != topo.degree(NodeId(id)) {
                return Err(EnergyError::DimensionMismatch {
                    profile: p.line_cards(),
                    state: topo.degree(NodeId(id)),
                }
                .into());
            }
        }
        Ok(Self {
            topo,
            profiles,
            mixes,
            weather,
            energy,
            location_index,
        })
    }

    pub fn sizing(&self, router: NodeId) -> &InfrastructureSizing {
        &self.mixes[router.0].sizing
    }

    /// Shortest weather series among the routers' locations.
    pub fn horizon(&self) -> usize {
        self.location_index
            .iter()
            .map(|l| self.weather.get(l).map_or(0, |s| s.len()))
            .min()
            .unwrap_or(0)
    }

    pub fn supply(&self, router: NodeId, hour: usize) -> RenewableSupply {
        let r = self
            .weather
            .get(&self.location_index[router.0])
            .expect("checked at build")
            .at(hour);
        renewable_supply(
            self.sizing(router),
            r.wind_speed,
            r.ghi,
            &self.energy.curve,
            self.energy.panel_rating_w,
        )
    }

    /// Green ratio of every router at `hour` if it ran fully powered.
    pub fn all_on_green_ratios(&self, hour: usize) -> Vec<f64> {
        self.topo
            .ids()
            .map(|id| green_ratio(&self.supply(id, hour), self.profiles[id.0].all_on_demand()))
            .collect()
    }
}

/// Knobs of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub alpha: f64,
    pub strategy: Strategy,
    pub window: SeasonWindow,
    pub request_rate: u32,
    pub cache_capacity: usize,
    pub bloom_bits_per_chunk: usize,
    pub bloom_hashes: u32,
    /// Count reply hops as well as request hops in the footprint.
    pub reply_symmetry: bool,
    pub hop_budget: Option<usize>,
    /// Seeds the request stream; runs that should see the same requests share it.
    pub workload_seed: u64,
    /// Seeds caching decisions.
    pub policy_seed: u64,
}

/// Raw counts for one simulated hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyCounters {
    pub hour: usize,
    pub requests: u64,
    pub hits: u64,
    pub redirects: u64,
    /// Redirects answered by a router rather than the origin.
    pub redirect_hits: u64,
    /// Requests for a pair without an adopted path, sent over a shortest path.
    pub failed_requests: u64,
    pub discovery_failures: u64,
    pub hop_units: u64,
    pub baseline_hop_units: u64,
    pub router_packets: Vec<u64>,
    pub router_green_packets: Vec<f64>,
    pub line_cards_used: Vec<Vec<bool>>,
    pub brown_wh: f64,
    pub baseline_brown_wh: f64,
}

impl HourlyCounters {
    pub fn packets(&self) -> u64 {
        self.router_packets.iter().sum()
    }

    pub fn green_packets(&self) -> f64 {
        self.router_green_packets.iter().sum()
    }

    pub fn brown_packets(&self) -> f64 {
        self.router_packets
            .iter()
            .zip(&self.router_green_packets)
            .map(|(&p, &g)| p as f64 - g)
            .sum()
    }

    pub fn router_on(&self, router: NodeId) -> bool {
        self.line_cards_used[router.0].iter().any(|&u| u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub params: SimParams,
    pub hours: Vec<HourlyCounters>,
}

impl SimRun {
    pub fn failed_discoveries(&self) -> u64 {
        self.hours.iter().map(|h| h.discovery_failures).sum()
    }
}

/// Content stores of every router plus the summaries they last advertised.
#[derive(Debug, Clone)]
pub struct CacheState {
    pub stores: Vec<ContentStore>,
    pub summaries: Vec<NeighborSummary>,
}

impl CacheState {
    pub fn new(routers: usize, capacity: usize) -> Result<Self, CacheError> {
        Ok(Self {
            stores: (0..routers)
                .map(|i| ContentStore::new(NodeId(i), capacity))
                .collect::<Result<_, _>>()?,
            summaries: Vec::new(),
        })
    }

    pub fn exchange_summaries(&mut self, filter_bits: usize, hashes: u32, epoch: usize) -> Result<(), CacheError> {
        self.summaries = self
            .stores
            .iter()
            .map(|s| rebuild_summary(s, filter_bits, hashes, epoch))
            .collect::<Result<_, _>>()?;
        Ok(())
    }
}

/// Outcome of routing one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub served_at: NodeId,
    pub hit: bool,
    pub redirected: bool,
    /// No adopted path existed; the request went over a shortest path.
    pub failed: bool,
    /// Links from the client host to the serving point, counting the access link.
    pub request_hops: usize,
    /// Routers the request passed through, in order; the reply retraces them.
    pub walk: Vec<NodeId>,
}

/// Links from a client host on `client`'s router to the router `server`
/// when no cache answers.
pub fn baseline_hops(router_distance: u32) -> usize {
    router_distance as usize + 1
}

/// Routes one request issued by a host attached to router `client` for
/// `chunk`, whose origin is router `server`.
///
/// The request enters the network at the client's router and follows the
/// adopted path. Every router before the server may answer from its store,
/// the access router included. With neighbour search a router that misses
/// may redirect once to a neighbour (other than the router it came from)
/// whose summary matches. A neighbour that turns out not to hold the chunk
/// forwards the request to the server over a shortest path, on which routers
/// may still answer from their stores. The reply
/// retraces the request and the admission policy runs on the path routers
/// between the serving point and the client.
#[allow(clippy::too_many_arguments)]
pub fn route_request<R: Rng>(
    topo: &Topology,
    client: NodeId,
    server: NodeId,
    chunk: ChunkId,
    path: Option<&RoutePath>,
    cache: &mut CacheState,
    policy: &dyn CachePolicy,
    green: &[f64],
    rng: &mut R,
) -> Result<Delivery, CacheError> {
    let (nodes, failed) = match path {
        Some(p) => (p.nodes().to_vec(), false),
        None => (bfs_path(topo, client, server), true),
    };
    let k = nodes.len() - 1;
    if failed || !policy.caches() {
        return Ok(Delivery {
            served_at: server,
            hit: false,
            redirected: false,
            failed,
            request_hops: k + 1,
            walk: nodes,
        });
    }

    let mut walk = Vec::with_capacity(nodes.len() + 1);
    // (served at, hit, redirected, request hops, path routers that admit the reply)
    let mut outcome = None;
    for i in 0..k {
        let r = nodes[i];
        walk.push(r);
        if cache.stores[r.0].lookup(chunk) == Lookup::Hit {
            outcome = Some((r, true, false, i + 1, i));
            break;
        }
        let Some(selection) = policy.neighbor_search() else {
            continue;
        };
        let prev = if i > 0 { Some(nodes[i - 1]) } else { None };
        let candidates = topo
            .neighbors(r)
            .iter()
            .filter(|&&n| Some(n) != prev)
            .filter_map(|n| cache.summaries.get(n.0));
        let matches = matching_neighbors(chunk, candidates);
        if let Some(nb) = select_neighbor(&matches, selection, green, rng) {
            walk.push(nb);
            if cache.stores[nb.0].lookup(chunk) == Lookup::Hit {
                outcome = Some((nb, true, true, i + 2, i + 1));
            } else {
                let onward = bfs_path(topo, nb, server);
                let mut served = (server, false, true, i + 1 + onward.len(), i + 1);
                for (j, &r) in onward.iter().enumerate().skip(1) {
                    walk.push(r);
                    if r != server && cache.stores[r.0].lookup(chunk) == Lookup::Hit {
                        served = (r, true, true, i + 2 + j, i + 1);
                        break;
                    }
                }
                outcome = Some(served);
            }
            break;
        }
    }
    let (served_at, hit, redirected, request_hops, admitting) = match outcome {
        Some(o) => o,
        None => {
            walk.push(server);
            (server, false, false, k + 1, k)
        }
    };

    let mut packet = ChunkPacket::from_origin(chunk, (k + 1) as u32);
    for &r in nodes[..admitting].iter().rev() {
        policy.admit(&mut cache.stores[r.0], &mut packet, rng)?;
    }
    Ok(Delivery {
        served_at,
        hit,
        redirected,
        failed: false,
        request_hops,
        walk,
    })
}

/// Runs one cell: every hour of `params.window` in order.
pub fn simulate(net: &Network, catalog: &Catalog, params: &SimParams) -> Result<SimRun, SimError> {
    let topo = &net.topo;
    let n = topo.len();
    if !(0.0..=1.0).contains(&params.alpha) {
        return Err(SimError::InvalidAlpha(params.alpha));
    }
    if !params.window.fits(net.horizon()) {
        return Err(SimError::WindowOutOfRange {
            window: format!(
                "{} [{}, {})",
                params.window.name,
                params.window.start_hour,
                params.window.end_hour()
            ),
            horizon: net.horizon(),
        });
    }
    let servers = topo.servers();
    let clients = topo.clients();
    if servers.is_empty() {
        return Err(SimError::MissingRole("server"));
    }
    if clients.is_empty() {
        return Err(SimError::MissingRole("client"));
    }
    let mut holding: Vec<NodeId> = catalog.placement().to_vec();
    holding.sort();
    holding.dedup();
    if let Some(bad) = holding.iter().find(|s| !servers.contains(s)) {
        return Err(SimError::PlacementMismatch(*bad));
    }

    let pairs: Vec<(NodeId, NodeId)> = if params.request_rate > 0 {
        clients
            .iter()
            .flat_map(|&c| holding.iter().map(move |&s| (c, s)))
            .collect()
    } else {
        Vec::new()
    };
    let hops = HopTable::for_destinations(topo, holding.iter().copied());
    let budget = params.hop_budget.unwrap_or_else(|| default_hop_budget(topo));
    let policy = params.strategy.policy();
    let mut cache = CacheState::new(if policy.caches() { n } else { 0 }, params.cache_capacity.max(1))?;
    let filter_bits = params.bloom_bits_per_chunk * params.cache_capacity;
    let factor = if params.reply_symmetry { 2 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(params.policy_seed);
    let mut routes = RouteTable::new();
    let mut hours = Vec::with_capacity(params.window.length_hours);

    for hour in params.window.start_hour..params.window.end_hour() {
        let supplies: Vec<RenewableSupply> = topo.ids().map(|id| net.supply(id, hour)).collect();
        let green: Vec<f64> = supplies
            .iter()
            .zip(&net.profiles)
            .map(|(s, p)| green_ratio(s, p.all_on_demand()))
            .collect();
        let field = GradientField::new(params.alpha, green.clone());
        let report = routes.refresh(topo, &field, &hops, &pairs, budget);

        if policy.neighbor_search().is_some() {
            cache.exchange_summaries(filter_bits, params.bloom_hashes, hour)?;
        }

        let mut used: Vec<Vec<bool>> = topo.ids().map(|id| vec![false; topo.degree(id)]).collect();
        let mut mark = |a: NodeId, b: NodeId| {
            used[a.0][topo.line_card(a, b).expect("walk follows links")] = true;
            used[b.0][topo.line_card(b, a).expect("walk follows links")] = true;
        };
        for &(c, s) in &pairs {
            if let Some(p) = routes.path(c, s) {
                for (a, b) in p.links() {
                    mark(a, b);
                }
            }
        }

        let mut counters = HourlyCounters {
            hour,
            requests: 0,
            hits: 0,
            redirects: 0,
            redirect_hits: 0,
            failed_requests: 0,
            discovery_failures: report.failed as u64,
            hop_units: 0,
            baseline_hop_units: 0,
            router_packets: vec![0; n],
            router_green_packets: vec![0.0; n],
            line_cards_used: Vec::new(),
            brown_wh: 0.0,
            baseline_brown_wh: 0.0,
        };
        for req in generate_requests(catalog, &clients, params.request_rate, hour, params.workload_seed) {
            let server = catalog.server_of(req.chunk);
            let d = route_request(
                topo,
                req.client,
                server,
                req.chunk,
                routes.path(req.client, server),
                &mut cache,
                policy.as_ref(),
                &green,
                &mut rng,
            )?;
            counters.requests += 1;
            counters.hits += u64::from(d.hit);
            counters.redirects += u64::from(d.redirected);
            counters.redirect_hits += u64::from(d.redirected && d.hit);
            counters.failed_requests += u64::from(d.failed);
            counters.hop_units += (d.request_hops * factor) as u64;
            let base = baseline_hops(hops.get(server).expect("server weights").weight(req.client));
            counters.baseline_hop_units += (base * factor) as u64;
            for w in d.walk.windows(2) {
                mark(w[0], w[1]);
            }
            // request in, reply out
            for r in &d.walk {
                counters.router_packets[r.0] += 2;
            }
        }

        for id in topo.ids() {
            let state = PowerState::from_line_cards(used[id.0].clone());
            let profile = &net.profiles[id.0];
            let supply = &supplies[id.0];
            let g = green_ratio(supply, power_demand(profile, &state)?);
            counters.router_green_packets[id.0] = counters.router_packets[id.0] as f64 * g;
            counters.brown_wh += brown_power(supply, profile, &state)?;
            counters.baseline_brown_wh += baseline_brown_power(supply, profile);
        }
        counters.line_cards_used = used;
        hours.push(counters);
    }
    Ok(SimRun {
        params: params.clone(),
        hours,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{assign_roles, parse_topology};
    use crate::weather::{HourReading, Season, WeatherSeries};
    use crate::workload::build_catalog;

    fn flat_weather(locs: &[&str], hours: usize, wind: f64, ghi: f64) -> WeatherSet {
        let mut set = WeatherSet::default();
        for l in locs {
            set.series.insert(
                l.to_string(),
                WeatherSeries::new(*l, vec![HourReading { wind_speed: wind, ghi }; hours]),
            );
        }
        set
    }

    fn line(n: usize) -> Topology {
        let mut text = String::new();
        for i in 0..n {
            text += &format!("node r{i} x\n");
        }
        for i in 1..n {
            text += &format!("edge r{} r{i}\n", i - 1);
        }
        let mut t = parse_topology(&text).unwrap();
        t.set_role(NodeId(0), crate::topology::Role::Client);
        t.set_role(NodeId(n - 1), crate::topology::Role::Server);
        t
    }

    fn params(strategy: Strategy, hours: usize) -> SimParams {
        SimParams {
            alpha: 0.0,
            strategy,
            window: SeasonWindow {
                name: Season::Winter,
                start_hour: 0,
                length_hours: hours,
            },
            request_rate: 10,
            cache_capacity: 64,
            bloom_bits_per_chunk: 16,
            bloom_hashes: 4,
            reply_symmetry: true,
            hop_budget: None,
            workload_seed: 1,
            policy_seed: 2,
        }
    }

    fn network(topo: Topology, hours: usize) -> Network {
        let locs = topo.locations();
        let locs: Vec<&str> = locs.iter().map(String::as_str).collect();
        let weather = flat_weather(&locs, hours, 8.0, 500.0);
        Network::build(topo, weather, Scenario::A, EnergyConfig::default(), 0).unwrap()
    }

    #[test]
    fn capacities() {
        assert!(scenario_capacities(Scenario::A, 5, 1).iter().all(|&c| c == 2.0));
        let b = scenario_capacities(Scenario::B, 50, 9);
        assert_eq!(b, scenario_capacities(Scenario::B, 50, 9));
        assert!(b.iter().all(|c| (0.0..=3.0).contains(c)));
    }

    #[test]
    fn zero_wind_location_gets_solar_only() {
        let topo = line(3);
        let weather = flat_weather(&["x"], 48, 0.0, 600.0);
        let net = Network::build(topo, weather, Scenario::A, EnergyConfig::default(), 0).unwrap();
        assert!(net.mixes.iter().all(|m| m.beta == 0.0));
    }

    #[test]
    fn cold_caches_serve_from_server() {
        let topo = line(4);
        let net = network(topo, 1);
        let catalog = build_catalog(1000, 0.9, &[NodeId(3)], 0).unwrap();
        let run = simulate(&net, &catalog, &params(Strategy::None, 1)).unwrap();
        let h = &run.hours[0];
        assert_eq!(h.hits, 0);
        assert_eq!(h.hop_units, h.baseline_hop_units);
        // host to client router, then three links
        assert_eq!(h.hop_units, 10 * 4 * 2);
    }

    #[test]
    fn all_hits_at_first_hop() {
        let topo = line(4);
        let mut cache = CacheState::new(4, 8).unwrap();
        let path = RoutePath::new(&topo, (0..4).map(NodeId).collect()).unwrap();
        let policy = Strategy::All.policy();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = vec![0.0; 4];
        let first = route_request(
            &topo,
            NodeId(0),
            NodeId(3),
            ChunkId(5),
            Some(&path),
            &mut cache,
            policy.as_ref(),
            &g,
            &mut rng,
        )
        .unwrap();
        assert!(!first.hit);
        assert_eq!(first.request_hops, 4);
        let second = route_request(
            &topo,
            NodeId(0),
            NodeId(3),
            ChunkId(5),
            Some(&path),
            &mut cache,
            policy.as_ref(),
            &g,
            &mut rng,
        )
        .unwrap();
        assert!(second.hit);
        assert_eq!(second.served_at, NodeId(0));
        assert_eq!(second.request_hops, 1);
    }

    #[test]
    fn redirect_to_neighbor() {
        // 0-1-2-3 with 4 hanging off 1
        let mut topo = parse_topology(
            "node a x\nnode b x\nnode c x\nnode d x\nnode e x\nedge a b\nedge b c\nedge c d\nedge b e\n",
        )
        .unwrap();
        topo.set_role(NodeId(0), crate::topology::Role::Client);
        topo.set_role(NodeId(3), crate::topology::Role::Server);
        let mut cache = CacheState::new(5, 8).unwrap();
        cache.stores[4].insert(ChunkId(9));
        cache.exchange_summaries(128, 4, 0).unwrap();
        let path = RoutePath::new(&topo, (0..4).map(NodeId).collect()).unwrap();
        let policy = Strategy::Nbsc.policy();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = route_request(
            &topo,
            NodeId(0),
            NodeId(3),
            ChunkId(9),
            Some(&path),
            &mut cache,
            policy.as_ref(),
            &[0.0; 5],
            &mut rng,
        )
        .unwrap();
        assert!(d.hit && d.redirected);
        assert_eq!(d.served_at, NodeId(4));
        assert_eq!(d.request_hops, 3);
        assert_eq!(d.walk, vec![NodeId(0), NodeId(1), NodeId(4)]);
    }

    #[test]
    fn zero_requests_switch_everything_off() {
        let topo = line(4);
        let net = network(topo, 3);
        let catalog = build_catalog(10, 0.9, &[NodeId(3)], 0).unwrap();
        let mut p = params(Strategy::All, 3);
        p.request_rate = 0;
        let run = simulate(&net, &catalog, &p).unwrap();
        for h in &run.hours {
            assert_eq!(h.brown_wh, 0.0);
            assert!(h.line_cards_used.iter().flatten().all(|u| !u));
        }
    }

    #[test]
    fn everything_fits_in_cache() {
        let topo = line(5);
        let net = network(topo, 48);
        let catalog = build_catalog(20, 0.9, &[NodeId(4)], 0).unwrap();
        let run = simulate(&net, &catalog, &params(Strategy::All, 48)).unwrap();
        let late = &run.hours[WARMUP_HOURS..];
        assert_eq!(
            late.iter().map(|h| h.hits).sum::<u64>(),
            late.iter().map(|h| h.requests).sum::<u64>()
        );
    }

    #[test]
    fn deterministic() {
        let topo = assign_roles(&crate::topology::synthetic_isp(20, 1, 2, 3), 3, 6).unwrap();
        let net = network(topo, 30);
        let catalog = build_catalog(500, 0.9, &net.topo.servers(), 0).unwrap();
        let mut p = params(Strategy::Nbsc, 30);
        p.alpha = 0.6;
        assert_eq!(
            simulate(&net, &catalog, &p).unwrap(),
            simulate(&net, &catalog, &p).unwrap()
        );
    }
}
