//! Experiment configuration, α-sweep orchestration and result files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::caching::{Strategy, DEFAULT_BLOOM_BITS_PER_CHUNK, DEFAULT_BLOOM_HASHES, DEFAULT_CAPACITY};
use crate::energy::{EnergyError, TurbinePowerCurve, DEFAULT_CHASSIS_W, DEFAULT_LINE_CARD_W, DEFAULT_PANEL_RATING_W};
use crate::metrics::{summarize, MetricsReport, RunMeta};
use crate::sim::{simulate, EnergyConfig, HourlyCounters, Network, Scenario, SimError, SimParams, WARMUP_HOURS};
use crate::topology::{assign_roles, load_topology, synthetic_isp, Topology, TopologyError};
use crate::weather::{
    load_weather_csv, synthesize_weather, Season, SeasonWindow, SyntheticProfile, WeatherError, WeatherSet,
    HOURS_PER_YEAR,
};
use crate::workload::{
    build_catalog, Catalog, WorkloadError, DEFAULT_CATALOG_SIZE, DEFAULT_REQUEST_RATE, DEFAULT_ZIPF_EXPONENT,
};

pub const SUMMARY_HEADER: [&str; 11] = [
    "alpha",
    "season",
    "strategy",
    "scenario",
    "seed",
    "hit_rate",
    "footprint_reduction",
    "green_brown_ratio",
    "brown_packet_reduction",
    "brown_energy_savings",
    "failed_discoveries",
];

pub const HOURLY_HEADER: [&str; 9] = [
    "hour",
    "requests",
    "hits",
    "hop_units",
    "baseline_hop_units",
    "green_packets",
    "brown_packets",
    "brown_watt_hours",
    "baseline_brown_watt_hours",
];

pub const MIX_HEADER: [&str; 5] = ["router", "location", "capacity_c", "beta", "avg_green_ratio"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest has no cell {0}")]
    NoSuchCell(usize),
}

fn invalid(field: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySection,
    pub weather: WeatherSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub workload: WorkloadSection,
    #[serde(default)]
    pub cache: CacheSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticTopology>,
    #[serde(default = "default_servers")]
    pub servers: usize,
    #[serde(default = "default_clients")]
    pub clients: usize,
}

fn default_servers() -> usize {
    40
}

fn default_clients() -> usize {
    80
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTopology {
    pub nodes: usize,
    pub locations: usize,
    #[serde(default = "default_links")]
    pub links_per_node: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_links() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherSection {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticWeather>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticWeather {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_hours: usize,
    /// Climates handed to locations round-robin in sorted location order.
    #[serde(default = "default_climates")]
    pub profiles: Vec<SyntheticProfile>,
}

fn default_horizon() -> usize {
    HOURS_PER_YEAR
}

/// Four contrasting climates: sunny and calm, windy and dull, and two mixes.
pub fn default_climates() -> Vec<SyntheticProfile> {
    let p = |solar_amplitude, wind_mean, wind_variance, seasonal_modulation| SyntheticProfile {
        solar_amplitude,
        wind_mean,
        wind_variance,
        seasonal_modulation,
    };
    vec![
        p(950.0, 3.0, 2.0, 0.3),
        p(500.0, 8.0, 9.0, 0.5),
        p(800.0, 6.0, 6.0, 0.4),
        p(650.0, 5.0, 8.0, 0.6),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_seasons")]
    pub seasons: Vec<Season>,
    /// Replacements for the default window of a season.
    #[serde(default)]
    pub windows: Vec<SeasonWindow>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            scenarios: default_scenarios(),
            strategies: default_strategies(),
            alphas: default_alphas(),
            seasons: default_seasons(),
            windows: Vec::new(),
            seed: default_seed(),
            output_dir: default_output(),
        }
    }
}

fn default_scenarios() -> Vec<Scenario> {
    vec![Scenario::A]
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::All, Strategy::Cachedbit, Strategy::Nbsc]
}

fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_seasons() -> Vec<Season> {
    Season::ALL.to_vec()
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSection {
    pub request_rate: u32,
    pub catalog_size: usize,
    pub zipf_exponent: f64,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        Self {
            request_rate: DEFAULT_REQUEST_RATE,
            catalog_size: DEFAULT_CATALOG_SIZE,
            zipf_exponent: DEFAULT_ZIPF_EXPONENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheSection {
    pub capacity: usize,
    pub bloom_bits_per_chunk: usize,
    pub bloom_hashes: u32,
}

impl Default for CacheSection {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            bloom_bits_per_chunk: DEFAULT_BLOOM_BITS_PER_CHUNK,
            bloom_hashes: DEFAULT_BLOOM_HASHES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    pub chassis_w: f64,
    pub line_card_w: f64,
    pub panel_rating_w: f64,
    /// `hy5`, `hy30` or a path to a `wind_speed_mps,power_w` CSV.
    pub turbine_curve: String,
    pub beta_step: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self {
            chassis_w: DEFAULT_CHASSIS_W,
            line_card_w: DEFAULT_LINE_CARD_W,
            panel_rating_w: DEFAULT_PANEL_RATING_W,
            turbine_curve: "hy5".to_string(),
            beta_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub reply_symmetry: bool,
    pub hop_budget: Option<usize>,
    pub warmup_hours: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            reply_symmetry: true,
            hop_budget: None,
            warmup_hours: WARMUP_HOURS,
        }
    }
}

impl RunConfig {
    /// Reads a TOML config; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if let Some(p) = cfg.topology.path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.weather.path.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.experiment.output_dir);
        if !matches!(cfg.energy.turbine_curve.as_str(), "hy5" | "hy30") {
            let mut p = PathBuf::from(&cfg.energy.turbine_curve);
            resolve(&mut p);
            cfg.energy.turbine_curve = p.to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        match (&self.topology.path, &self.topology.synthetic) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(invalid("topology", "give exactly one of `path` or `synthetic`"))
            }
            (Some(p), None) if !p.is_file() => {
                return Err(invalid("topology.path", format!("{} does not exist", p.display())))
            }
            (None, Some(s)) if s.nodes < 3 || s.locations == 0 || s.links_per_node == 0 => {
                return Err(invalid(
                    "topology.synthetic",
                    "needs at least 3 nodes, 1 location and 1 link per node",
                ))
            }
            _ => {}
        }
        if self.topology.servers == 0 {
            return Err(invalid("topology.servers", "at least one server router is needed"));
        }
        if self.topology.clients == 0 {
            return Err(invalid("topology.clients", "at least one client router is needed"));
        }
        match (&self.weather.path, &self.weather.synthetic) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(invalid("weather", "give exactly one of `path` or `synthetic`"))
            }
            (Some(p), None) if !p.is_file() => {
                return Err(invalid("weather.path", format!("{} does not exist", p.display())))
            }
            (None, Some(s)) if s.profiles.is_empty() => {
                return Err(invalid("weather.synthetic.profiles", "list is empty"))
            }
            _ => {}
        }
        let e = &self.experiment;
        if e.scenarios.is_empty() {
            return Err(invalid("experiment.scenarios", "list is empty"));
        }
        if e.strategies.is_empty() {
            return Err(invalid("experiment.strategies", "list is empty"));
        }
        if e.alphas.is_empty() {
            return Err(invalid("experiment.alphas", "list is empty"));
        }
        if let Some(a) = e.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(invalid("experiment.alphas", format!("{a} is outside [0,1]")));
        }
        if e.seasons.is_empty() {
            return Err(invalid("experiment.seasons", "list is empty"));
        }
        if let Some(w) = e.windows.iter().find(|w| w.length_hours == 0) {
            return Err(invalid("experiment.windows", format!("{} window is empty", w.name)));
        }
        if self.workload.catalog_size == 0 {
            return Err(invalid("workload.catalog_size", "must be at least 1"));
        }
        if !(self.workload.zipf_exponent.is_finite() && self.workload.zipf_exponent >= 0.0) {
            return Err(invalid("workload.zipf_exponent", "must be finite and non-negative"));
        }
        if self.cache.capacity == 0 {
            return Err(invalid("cache.capacity", "must be at least 1 chunk"));
        }
        if self.cache.bloom_bits_per_chunk == 0 {
            return Err(invalid("cache.bloom_bits_per_chunk", "must be positive"));
        }
        if self.cache.bloom_hashes == 0 {
            return Err(invalid("cache.bloom_hashes", "must be positive"));
        }
        let en = &self.energy;
        if !(en.chassis_w > 0.0) {
            return Err(invalid("energy.chassis_w", "must be positive"));
        }
        if !(en.line_card_w > 0.0) {
            return Err(invalid("energy.line_card_w", "must be positive"));
        }
        if !(en.panel_rating_w >= 0.0) {
            return Err(invalid("energy.panel_rating_w", "must be non-negative"));
        }
        if !(en.beta_step > 0.0 && en.beta_step <= 1.0) {
            return Err(invalid("energy.beta_step", "must be in (0,1]"));
        }
        if !matches!(en.turbine_curve.as_str(), "hy5" | "hy30") && !Path::new(&en.turbine_curve).is_file() {
            return Err(invalid(
                "energy.turbine_curve",
                format!("`{}` is neither hy5, hy30 nor an existing file", en.turbine_curve),
            ));
        }
        if self.simulation.hop_budget == Some(0) {
            return Err(invalid("simulation.hop_budget", "must be positive"));
        }
        Ok(())
    }

    /// Season windows in configured order, with overrides applied.
    pub fn windows(&self) -> Vec<SeasonWindow> {
        self.experiment
            .seasons
            .iter()
            .map(|&s| {
                self.experiment
                    .windows
                    .iter()
                    .find(|w| w.name == s)
                    .copied()
                    .unwrap_or_else(|| s.default_window())
            })
            .collect()
    }

    pub fn beta_grid(&self) -> Vec<f64> {
        let steps = (1.0 / self.energy.beta_step).round() as usize;
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable 64-bit seed from a master seed and labelled coordinates.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub alpha_index: usize,
    pub alpha: f64,
    pub window: SeasonWindow,
    pub strategy: Strategy,
    pub scenario: Scenario,
}

impl Cell {
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[
                "cell",
                &self.alpha_index.to_string(),
                self.window.name.name(),
                self.strategy.name(),
                self.scenario.name(),
            ],
        )
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_alpha{:02}.csv",
            self.scenario, self.window.name, self.strategy, self.alpha_index
        )
    }
}

/// Loaded inputs shared by every cell of a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub topology: Topology,
    pub weather: WeatherSet,
    pub energy: EnergyConfig,
    pub catalog: Catalog,
    pub windows: Vec<SeasonWindow>,
}

impl Prepared {
    pub fn new(config: RunConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let raw = match (&config.topology.path, &config.topology.synthetic) {
            (Some(p), _) => load_topology(p)?,
            (None, Some(s)) => synthetic_isp(s.nodes, s.locations, s.links_per_node, s.seed),
            (None, None) => unreachable!("validated"),
        };
        if config.topology.servers + config.topology.clients > raw.len() {
            return Err(invalid(
                "topology.servers",
                format!(
                    "{} servers and {} clients do not fit on {} routers",
                    config.topology.servers,
                    config.topology.clients,
                    raw.len()
                ),
            ));
        }
        let topology = assign_roles(&raw, config.topology.servers, config.topology.clients)?;
        let weather = match (&config.weather.path, &config.weather.synthetic) {
            (Some(p), _) => load_weather_csv(p)?,
            (None, Some(s)) => synthetic_weather_for(&topology, s)?,
            (None, None) => unreachable!("validated"),
        };
        for loc in topology.locations() {
            if weather.get(&loc).is_none() {
                return Err(invalid("weather", format!("no series for location `{loc}`")));
            }
        }
        let horizon = topology
            .locations()
            .iter()
            .filter_map(|l| weather.get(l).map(|s| s.len()))
            .min()
            .unwrap_or(0);
        let windows = config.windows();
        if let Some(w) = windows.iter().find(|w| !w.fits(horizon)) {
            return Err(invalid(
                "experiment.seasons",
                format!(
                    "{} window [{}, {}) exceeds the {horizon}-hour weather",
                    w.name,
                    w.start_hour,
                    w.end_hour()
                ),
            ));
        }
        let curve = match config.energy.turbine_curve.as_str() {
            "hy5" => TurbinePowerCurve::hy5(),
            "hy30" => TurbinePowerCurve::hy30(),
            path => {
                let text = fs::read_to_string(path).map_err(io_err(Path::new(path)))?;
                TurbinePowerCurve::from_csv_str(&text)?
            }
        };
        let energy = EnergyConfig {
            chassis_w: config.energy.chassis_w,
            line_card_w: config.energy.line_card_w,
            curve,
            panel_rating_w: config.energy.panel_rating_w,
            beta_grid: config.beta_grid(),
        };
        let catalog = build_catalog(
            config.workload.catalog_size,
            config.workload.zipf_exponent,
            &topology.servers(),
            derive_seed(config.experiment.seed, &["catalog"]),
        )?;
        Ok(Self {
            config,
            topology,
            weather,
            energy,
            catalog,
            windows,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.config.experiment.seed
    }

    pub fn workload_seed(&self) -> u64 {
        derive_seed(self.master_seed(), &["workload"])
    }

    pub fn network_seed(&self, scenario: Scenario) -> u64 {
        derive_seed(self.master_seed(), &["capacity", scenario.name()])
    }

    pub fn network(&self, scenario: Scenario) -> Result<Network, ExperimentError> {
        Ok(Network::build(
            self.topology.clone(),
            self.weather.clone(),
            scenario,
            self.energy.clone(),
            self.network_seed(scenario),
        )?)
    }

    /// Sweep cells ordered by scenario, season, strategy, α.
    pub fn cells(&self) -> Vec<Cell> {
        let e = &self.config.experiment;
        let mut out = Vec::new();
        for &scenario in &e.scenarios {
            for &window in &self.windows {
                for &strategy in &e.strategies {
                    for (alpha_index, &alpha) in e.alphas.iter().enumerate() {
                        out.push(Cell {
                            alpha_index,
                            alpha,
                            window,
                            strategy,
                            scenario,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn params(&self, alpha: f64, strategy: Strategy, window: SeasonWindow, policy_seed: u64) -> SimParams {
        SimParams {
            alpha,
            strategy,
            window,
            request_rate: self.config.workload.request_rate,
            cache_capacity: self.config.cache.capacity,
            bloom_bits_per_chunk: self.config.cache.bloom_bits_per_chunk,
            bloom_hashes: self.config.cache.bloom_hashes,
            reply_symmetry: self.config.simulation.reply_symmetry,
            hop_budget: self.config.simulation.hop_budget,
            workload_seed: self.workload_seed(),
            policy_seed,
        }
    }

    /// The reference run: shortest paths, no caching.
    pub fn baseline(&self, net: &Network, window: SeasonWindow) -> Result<Vec<HourlyCounters>, ExperimentError> {
        let p = self.params(0.0, Strategy::None, window, 0);
        Ok(simulate(net, &self.catalog, &p)?.hours)
    }

    pub fn run_cell(
        &self,
        net: &Network,
        cell: &Cell,
        baseline: &[HourlyCounters],
    ) -> Result<(Vec<HourlyCounters>, MetricsReport), ExperimentError> {
        let seed = cell.seed(self.master_seed());
        let run = simulate(
            net,
            &self.catalog,
            &self.params(cell.alpha, cell.strategy, cell.window, seed),
        )?;
        let meta = RunMeta {
            alpha: cell.alpha,
            season: cell.window.name,
            strategy: cell.strategy,
            scenario: cell.scenario,
            seed,
        };
        let report = summarize(meta, &run.hours, baseline, self.config.simulation.warmup_hours);
        Ok((run.hours, report))
    }
}

/// Synthetic weather for every location of `topo`, climates assigned
/// round-robin over the sorted location list.
pub fn synthetic_weather_for(topo: &Topology, s: &SyntheticWeather) -> Result<WeatherSet, WeatherError> {
    let mut set = WeatherSet::default();
    for (i, loc) in topo.locations().into_iter().enumerate() {
        let profile = &s.profiles[i % s.profiles.len()];
        let seed = derive_seed(s.seed, &["weather", &loc]);
        let series = synthesize_weather(loc.clone(), seed, profile, s.horizon_hours)?;
        set.series.insert(loc, series);
    }
    Ok(set)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_hourly_csv(w: impl Write, hours: &[HourlyCounters]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HOURLY_HEADER)?;
    for h in hours {
        out.write_record([
            h.hour.to_string(),
            h.requests.to_string(),
            h.hits.to_string(),
            h.hop_units.to_string(),
            h.baseline_hop_units.to_string(),
            h.green_packets().to_string(),
            h.brown_packets().to_string(),
            h.brown_wh.to_string(),
            h.baseline_brown_wh.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn summary_record(r: &MetricsReport) -> [String; 11] {
    [
        r.meta.alpha.to_string(),
        r.meta.season.to_string(),
        r.meta.strategy.to_string(),
        r.meta.scenario.to_string(),
        r.meta.seed.to_string(),
        opt(r.summary.hit_rate),
        opt(r.summary.footprint_reduction),
        r.summary.green_brown_ratio.to_string(),
        opt(r.summary.brown_packet_reduction),
        r.summary.brown_energy_savings.savings.to_string(),
        r.failed_discoveries.to_string(),
    ]
}

pub fn write_summary_csv<'a>(
    w: impl Write,
    reports: impl IntoIterator<Item = &'a MetricsReport>,
) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in reports {
        out.write_record(summary_record(r))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: usize,
    pub cell: Cell,
    pub seed: u64,
    pub per_hour_csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub index: usize,
    pub cell: Cell,
    pub error: String,
}

/// Everything needed to repeat any cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub catalog_seed: u64,
    pub workload_seed: u64,
    pub network_seeds: BTreeMap<String, u64>,
    pub cells: Vec<CellRecord>,
    pub failed_cells: Vec<FailedCell>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
    pub reports: Vec<MetricsReport>,
    pub failed: Vec<FailedCell>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Runs every cell of the config and writes per-hour CSVs, `summary.csv` and
/// `manifest.json` under the output directory. A cell that fails is listed
/// in the manifest; the other cells are still written.
pub fn run_experiment(config: RunConfig) -> Result<ExperimentOutcome, ExperimentError> {
    let prepared = Prepared::new(config)?;
    let out_dir = prepared.config.experiment.output_dir.clone();
    let cells_dir = out_dir.join("cells");
    fs::create_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;

    let mut networks = BTreeMap::new();
    for &sc in &prepared.config.experiment.scenarios {
        networks.insert(sc, prepared.network(sc)?);
    }
    let mut baseline_keys: Vec<(Scenario, SeasonWindow)> = Vec::new();
    for &sc in &prepared.config.experiment.scenarios {
        for &w in &prepared.windows {
            baseline_keys.push((sc, w));
        }
    }
    let baselines: Vec<Result<Vec<HourlyCounters>, ExperimentError>> =
        map_maybe_parallel(&baseline_keys, |(sc, w)| prepared.baseline(&networks[sc], *w));

    let cells = prepared.cells();
    let results = map_maybe_parallel(&cells, |cell| {
        let bi = baseline_keys
            .iter()
            .position(|(sc, w)| *sc == cell.scenario && w.name == cell.window.name)
            .expect("baseline for every cell");
        let baseline = baselines[bi].as_ref().map_err(|e| e.to_string())?;
        let (hours, report) = prepared
            .run_cell(&networks[&cell.scenario], cell, baseline)
            .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_hourly_csv(&mut buf, &hours).map_err(|e| e.to_string())?;
        let path = cells_dir.join(cell.file_name());
        write_file(&path, &buf).map_err(|e| e.to_string())?;
        Ok::<_, String>(report)
    });

    let mut reports = Vec::new();
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (index, (cell, res)) in cells.iter().zip(results).enumerate() {
        let seed = cell.seed(prepared.master_seed());
        match res {
            Ok(r) => {
                reports.push(r);
                records.push(CellRecord {
                    index,
                    cell: *cell,
                    seed,
                    per_hour_csv: format!("cells/{}", cell.file_name()),
                });
            }
            Err(error) => failed.push(FailedCell {
                index,
                cell: *cell,
                error,
            }),
        }
    }

    let summary_path = out_dir.join("summary.csv");
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &reports)?;
    write_file(&summary_path, &buf)?;

    let manifest = Manifest {
        config_hash: prepared.config.hash(),
        config: prepared.config.clone(),
        master_seed: prepared.master_seed(),
        catalog_seed: derive_seed(prepared.master_seed(), &["catalog"]),
        workload_seed: prepared.workload_seed(),
        network_seeds: prepared
            .config
            .experiment
            .scenarios
            .iter()
            .map(|&s| (s.to_string(), prepared.network_seed(s)))
            .collect(),
        cells: records,
        failed_cells: failed.clone(),
    };
    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(ExperimentOutcome {
        output_dir: out_dir,
        summary_path,
        manifest_path,
        reports,
        failed,
    })
}

/// Re-runs cell `index` of a manifest into `out_dir`: its per-hour CSV under
/// `cells/` and a one-row `summary.csv`.
pub fn rerun_cell(manifest: &Manifest, index: usize, out_dir: &Path) -> Result<MetricsReport, ExperimentError> {
    let cell = manifest
        .cells
        .iter()
        .map(|r| (r.index, r.cell))
        .chain(manifest.failed_cells.iter().map(|f| (f.index, f.cell)))
        .find(|(i, _)| *i == index)
        .map(|(_, c)| c)
        .ok_or(ExperimentError::NoSuchCell(index))?;
    let prepared = Prepared::new(manifest.config.clone())?;
    let net = prepared.network(cell.scenario)?;
    let baseline = prepared.baseline(&net, cell.window)?;
    let (hours, report) = prepared.run_cell(&net, &cell, &baseline)?;
    let cells_dir = out_dir.join("cells");
    fs::create_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;
    let mut buf = Vec::new();
    write_hourly_csv(&mut buf, &hours)?;
    write_file(&cells_dir.join(cell.file_name()), &buf)?;
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, [&report])?;
    write_file(&out_dir.join("summary.csv"), &buf)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRow {
    pub router: String,
    pub location: String,
    pub capacity_c: f64,
    pub beta: f64,
    pub avg_green_ratio: f64,
}

/// Per-router optimal wind share and mean green ratio under `scenario`.
pub fn mix_report(config: RunConfig, scenario: Scenario) -> Result<Vec<MixRow>, ExperimentError> {
    let prepared = Prepared::new(config)?;
    let net = prepared.network(scenario)?;
    Ok(net
        .topo
        .ids()
        .map(|id| {
            let node = net.topo.node(id);
            let mix = &net.mixes[id.0];
            MixRow {
                router: node.name.clone(),
                location: node.location_id.clone(),
                capacity_c: mix.sizing.capacity_c,
                beta: mix.beta,
                avg_green_ratio: mix.avg_green_ratio,
            }
        })
        .collect())
}

pub fn write_mix_csv(w: impl Write, rows: &[MixRow]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MIX_HEADER)?;
    for r in rows {
        out.write_record([
            r.router.clone(),
            r.location.clone(),
            r.capacity_c.to_string(),
            r.beta.to_string(),
            r.avg_green_ratio.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(feature = "parallel")]
fn map_maybe_parallel<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_maybe_parallel<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
