//! Router power model, renewable supply, green ratio and brown-energy accounting.
//!
//! All quantities are instantaneous watts. The simulator advances in one-hour
//! steps, so a watt held for a step is accounted as one watt-hour.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weather::WeatherSeries;

/// Cisco 7507 chassis draw used as the default router profile.
pub const DEFAULT_CHASSIS_W: f64 = 210.0;
/// Per line-card draw of the same router.
pub const DEFAULT_LINE_CARD_W: f64 = 70.0;
/// Rated output of the default photovoltaic panel at 1000 W/m².
pub const DEFAULT_PANEL_RATING_W: f64 = 4000.0;
/// Irradiance at which a panel delivers its rated output.
pub const REFERENCE_GHI: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("power state has {state} line-cards but the profile has {profile}")]
    DimensionMismatch { profile: usize, state: usize },
    #[error("invalid router profile: {0}")]
    InvalidProfile(String),
    #[error("invalid infrastructure sizing: {0}")]
    InvalidSizing(String),
    #[error("invalid turbine curve: {0}")]
    InvalidCurve(String),
    #[error("cannot install {source_kind} capacity: the weather series never produces any {source_kind} power")]
    UnsatisfiableShare { source_kind: &'static str },
    #[error("beta grid is empty")]
    EmptyBetaGrid,
}

/// How much renewable generation a router has installed.
///
/// `wind_scale` multiplies the unit turbine curve, `solar_scale` the unit panel
/// rating. `beta` and `capacity_c` record the mix and peak-to-demand ratio the
/// scales were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfrastructureSizing {
    pub wind_scale: f64,
    pub solar_scale: f64,
    pub beta: f64,
    pub capacity_c: f64,
}

impl InfrastructureSizing {
    pub fn none() -> Self {
        Self {
            wind_scale: 0.0,
            solar_scale: 0.0,
            beta: 0.0,
            capacity_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.wind_scale >= 0.0 && self.solar_scale >= 0.0) {
            return Err(EnergyError::InvalidSizing(format!(
                "scales must be non-negative (wind {}, solar {})",
                self.wind_scale, self.solar_scale
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(EnergyError::InvalidSizing(format!("beta {} outside [0,1]", self.beta)));
        }
        if !(self.capacity_c >= 0.0) {
            return Err(EnergyError::InvalidSizing(format!(
                "capacity {} is negative",
                self.capacity_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterEnergyProfile {
    chassis_power: f64,
    line_card_powers: Vec<f64>,
    pub sizing: InfrastructureSizing,
}

impl RouterEnergyProfile {
    pub fn new(
        chassis_power: f64,
        line_card_powers: Vec<f64>,
        sizing: InfrastructureSizing,
    ) -> Result<Self, EnergyError> {
        if !(chassis_power > 0.0) {
            return Err(EnergyError::InvalidProfile(format!(
                "chassis power {chassis_power} must be positive"
            )));
        }
        if let Some(bad) = line_card_powers.iter().find(|p| !(**p > 0.0)) {
            return Err(EnergyError::InvalidProfile(format!(
                "line-card power {bad} must be positive"
            )));
        }
        sizing.validate()?;
        Ok(Self {
            chassis_power,
            line_card_powers,
            sizing,
        })
    }

    /// A router with `line_cards` identical cards and no renewables installed.
    pub fn uniform(chassis_power: f64, line_card_power: f64, line_cards: usize) -> Result<Self, EnergyError> {
        Self::new(
            chassis_power,
            vec![line_card_power; line_cards],
            InfrastructureSizing::none(),
        )
    }

    pub fn chassis_power(&self) -> f64 {
        self.chassis_power
    }

    pub fn line_card_powers(&self) -> &[f64] {
        &self.line_card_powers
    }

    pub fn line_cards(&self) -> usize {
        self.line_card_powers.len()
    }

    /// Demand with every component powered on.
    pub fn all_on_demand(&self) -> f64 {
        if self.line_card_powers.is_empty() {
            return 0.0;
        }
        self.chassis_power + self.line_card_powers.iter().sum::<f64>()
    }
}

/// On/off configuration of a router's chassis and line-cards.
///
/// The chassis is on exactly when at least one line-card is on; the fields are
/// private so every mutation goes through [`PowerState::set_line_card`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerState {
    chassis_on: bool,
    line_cards_on: Vec<bool>,
}

impl PowerState {
    pub fn from_line_cards(line_cards_on: Vec<bool>) -> Self {
        let chassis_on = line_cards_on.iter().any(|&on| on);
        Self {
            chassis_on,
            line_cards_on,
        }
    }

    pub fn all_on(line_cards: usize) -> Self {
        Self::from_line_cards(vec![true; line_cards])
    }

    pub fn all_off(line_cards: usize) -> Self {
        Self::from_line_cards(vec![false; line_cards])
    }

    pub fn chassis_on(&self) -> bool {
        self.chassis_on
    }

    pub fn line_cards_on(&self) -> &[bool] {
        &self.line_cards_on
    }

    pub fn set_line_card(&mut self, index: usize, on: bool) {
        self.line_cards_on[index] = on;
        self.chassis_on = self.line_cards_on.iter().any(|&on| on);
    }

    fn check(&self, profile: &RouterEnergyProfile) -> Result<(), EnergyError> {
        if self.line_cards_on.len() != profile.line_cards() {
            return Err(EnergyError::DimensionMismatch {
                profile: profile.line_cards(),
                state: self.line_cards_on.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RenewableSupply {
    pub wind_power: f64,
    pub solar_power: f64,
}

impl RenewableSupply {
    pub fn total(&self) -> f64 {
        self.wind_power + self.solar_power
    }
}

/// Piecewise-linear turbine output table of `(wind speed m/s, power W)` points.
///
/// Output is zero below the first point (cut-in) and above the last point
/// (cut-out), and linearly interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbinePowerCurve {
    points: Vec<(f64, f64)>,
}

const HY5_CURVE_CSV: &str = include_str!("../data/turbine_hy5.csv");
const HY30_CURVE_CSV: &str = include_str!("../data/turbine_hy30.csv");

impl TurbinePowerCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, EnergyError> {
        if points.len() < 2 {
            return Err(EnergyError::InvalidCurve("need at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(EnergyError::InvalidCurve(format!(
                    "wind speeds must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.0 >= 0.0 && p.1 >= 0.0)) {
            return Err(EnergyError::InvalidCurve(format!(
                "negative or NaN point ({}, {})",
                p.0, p.1
            )));
        }
        Ok(Self { points })
    }

    /// Parses a `wind_speed_mps,power_w` table. Blank lines, `#` comments and a
    /// header line are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self, EnergyError> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("wind_speed") {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let parse = |f: Option<&str>| -> Result<f64, EnergyError> {
                f.and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| EnergyError::InvalidCurve(format!("line {}: expected two numbers", lineno + 1)))
            };
            let speed = parse(fields.next())?;
            let power = parse(fields.next())?;
            points.push((speed, power));
        }
        Self::new(points)
    }

    /// The 5.4 kW HY5-AD5.6 unit.
    pub fn hy5() -> Self {
        Self::from_csv_str(HY5_CURVE_CSV).expect("bundled HY5 curve is valid")
    }

    /// The 30 kW HY30-AD11 unit.
    pub fn hy30() -> Self {
        Self::from_csv_str(HY30_CURVE_CSV).expect("bundled HY30 curve is valid")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn power_at(&self, wind_speed: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if !(wind_speed >= first.0) || wind_speed > last.0 {
            return 0.0;
        }
        // first index whose speed is >= wind_speed
        let idx = self.points.partition_point(|p| p.0 < wind_speed);
        if idx == 0 {
            return first.1;
        }
        let (x0, y0) = self.points[idx - 1];
        let (x1, y1) = self.points[idx];
        y0 + (y1 - y0) * (wind_speed - x0) / (x1 - x0)
    }

    pub fn rated_power(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

/// `x0·CC + Σ xi·LCCi` for the given on/off state.
pub fn power_demand(profile: &RouterEnergyProfile, state: &PowerState) -> Result<f64, EnergyError> {
    state.check(profile)?;
    if !state.chassis_on {
        return Ok(0.0);
    }
    let cards: f64 = profile
        .line_card_powers
        .iter()
        .zip(&state.line_cards_on)
        .filter(|(_, &on)| on)
        .map(|(p, _)| *p)
        .sum();
    Ok(profile.chassis_power + cards)
}

/// Solar output of a panel of `panel_rating` watts under `ghi` W/m².
pub fn unit_solar_power(ghi: f64, panel_rating: f64) -> f64 {
    panel_rating * ghi.max(0.0) / REFERENCE_GHI
}

pub fn renewable_supply(
    sizing: &InfrastructureSizing,
    wind_speed: f64,
    ghi: f64,
    curve: &TurbinePowerCurve,
    panel_rating: f64,
) -> RenewableSupply {
    RenewableSupply {
        wind_power: sizing.wind_scale * curve.power_at(wind_speed.max(0.0)),
        solar_power: sizing.solar_scale * unit_solar_power(ghi, panel_rating),
    }
}

/// Share of `demand` covered by renewables, saturating at 1. An idle router
/// (zero demand) draws no brown power and counts as fully green.
pub fn green_ratio(supply: &RenewableSupply, demand: f64) -> f64 {
    let total = supply.total();
    if demand <= 0.0 || total >= demand {
        1.0
    } else {
        (total / demand).max(0.0)
    }
}

/// Brown (non-renewable) draw for the given state; surplus supply is discarded.
pub fn brown_power(
    supply: &RenewableSupply,
    profile: &RouterEnergyProfile,
    state: &PowerState,
) -> Result<f64, EnergyError> {
    let demand = power_demand(profile, state)?;
    Ok((demand - supply.total()).max(0.0))
}

/// Brown draw with every component on, i.e. the no-power-management baseline.
pub fn baseline_brown_power(supply: &RenewableSupply, profile: &RouterEnergyProfile) -> f64 {
    (profile.all_on_demand() - supply.total()).max(0.0)
}

/// One router during one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterHour {
    pub router: usize,
    pub state: PowerState,
    pub supply: RenewableSupply,
}

/// Running sums of actual and all-on brown energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BrownLedger {
    pub actual_wh: f64,
    pub baseline_wh: f64,
}

impl BrownLedger {
    pub fn record(
        &mut self,
        supply: &RenewableSupply,
        profile: &RouterEnergyProfile,
        state: &PowerState,
    ) -> Result<(), EnergyError> {
        self.actual_wh += brown_power(supply, profile, state)?;
        self.baseline_wh += baseline_brown_power(supply, profile);
        Ok(())
    }

    pub fn merge(&mut self, other: &BrownLedger) {
        self.actual_wh += other.actual_wh;
        self.baseline_wh += other.baseline_wh;
    }

    pub fn savings(&self) -> BrownSavings {
        if self.baseline_wh > 0.0 {
            BrownSavings {
                savings: 1.0 - self.actual_wh / self.baseline_wh,
                fully_green: false,
            }
        } else {
            BrownSavings {
                savings: 0.0,
                fully_green: true,
            }
        }
    }
}

/// Network-wide brown-energy reduction. When the all-on network never draws
/// brown power there is nothing to save: `savings` is 0 and `fully_green` set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownSavings {
    pub savings: f64,
    pub fully_green: bool,
}

/// `1 − ΣΣ brPC(X,t) / ΣΣ brPC(X⁰,t)` over every router-hour in `records`.
pub fn brown_savings(records: &[RouterHour], profiles: &[RouterEnergyProfile]) -> Result<BrownSavings, EnergyError> {
    let mut ledger = BrownLedger::default();
    for rec in records {
        let profile = profiles
            .get(rec.router)
            .ok_or_else(|| EnergyError::InvalidProfile(format!("no profile for router {}", rec.router)))?;
        ledger.record(&rec.supply, profile, &rec.state)?;
    }
    Ok(ledger.savings())
}

/// Hourly output of one turbine and one panel at a location.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitProfile {
    pub wind: Vec<f64>,
    pub solar: Vec<f64>,
}

impl UnitProfile {
    pub fn from_weather(weather: &WeatherSeries, curve: &TurbinePowerCurve, panel_rating: f64) -> Self {
        let wind = weather
            .readings()
            .iter()
            .map(|r| curve.power_at(r.wind_speed))
            .collect();
        let solar = weather
            .readings()
            .iter()
            .map(|r| unit_solar_power(r.ghi, panel_rating))
            .collect();
        Self { wind, solar }
    }

    fn peaks(&self) -> (f64, f64) {
        let peak = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        (peak(&self.wind), peak(&self.solar))
    }
}

/// Sizes wind and solar so that wind holds a `beta` share of the installed
/// peak capacity and the annual peak of combined output equals
/// `capacity_c · demand_all_on`.
///
/// Each source is first normalised to its own annual peak. The two normalised
/// series are mixed `beta : 1−beta` and the mix is scaled so that its largest
/// hourly value hits the target.
pub fn size_infrastructure(
    beta: f64,
    capacity_c: f64,
    weather: &WeatherSeries,
    demand_all_on: f64,
    curve: &TurbinePowerCurve,
    panel_rating: f64,
) -> Result<InfrastructureSizing, EnergyError> {
    let unit = UnitProfile::from_weather(weather, curve, panel_rating);
    size_from_profile(beta, capacity_c, &unit, demand_all_on)
}

pub fn size_from_profile(
    beta: f64,
    capacity_c: f64,
    unit: &UnitProfile,
    demand_all_on: f64,
) -> Result<InfrastructureSizing, EnergyError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(EnergyError::InvalidSizing(format!("beta {beta} outside [0,1]")));
    }
    if !(capacity_c >= 0.0) {
        return Err(EnergyError::InvalidSizing(format!("capacity {capacity_c} is negative")));
    }
    let target = capacity_c * demand_all_on;
    if target == 0.0 {
        return Ok(InfrastructureSizing {
            wind_scale: 0.0,
            solar_scale: 0.0,
            beta,
            capacity_c,
        });
    }
    let (wind_peak, solar_peak) = unit.peaks();
    if beta > 0.0 && wind_peak <= 0.0 {
        return Err(EnergyError::UnsatisfiableShare { source_kind: "wind" });
    }
    if beta < 1.0 && solar_peak <= 0.0 {
        return Err(EnergyError::UnsatisfiableShare { source_kind: "solar" });
    }
    let wind_weight = if beta > 0.0 { beta / wind_peak } else { 0.0 };
    let solar_weight = if beta < 1.0 { (1.0 - beta) / solar_peak } else { 0.0 };
    let mix_peak = unit
        .wind
        .iter()
        .zip(&unit.solar)
        .map(|(w, s)| wind_weight * w + solar_weight * s)
        .fold(0.0, f64::max);
    let k = target / mix_peak;
    Ok(InfrastructureSizing {
        wind_scale: k * wind_weight,
        solar_scale: k * solar_weight,
        beta,
        capacity_c,
    })
}

/// Mean hourly green ratio of an all-on router sized with `sizing`.
pub fn average_green_ratio(sizing: &InfrastructureSizing, unit: &UnitProfile, demand_all_on: f64) -> f64 {
    let n = unit.wind.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = unit
        .wind
        .iter()
        .zip(&unit.solar)
        .map(|(w, s)| {
            let supply = RenewableSupply {
                wind_power: sizing.wind_scale * w,
                solar_power: sizing.solar_scale * s,
            };
            green_ratio(&supply, demand_all_on)
        })
        .sum();
    sum / n as f64
}

/// The default β grid, 0.0 to 1.0 in steps of 0.1.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixChoice {
    pub beta: f64,
    pub avg_green_ratio: f64,
    pub sizing: InfrastructureSizing,
}

/// Picks the β on `beta_grid` whose sizing maximises the mean green ratio.
/// Ties keep the smallest β; β values that cannot be installed at this
/// location (no wind at all, say) are skipped.
pub fn optimal_beta(
    weather: &WeatherSeries,
    capacity_c: f64,
    demand_all_on: f64,
    curve: &TurbinePowerCurve,
    panel_rating: f64,
    beta_grid: &[f64],
) -> Result<MixChoice, EnergyError> {
    let unit = UnitProfile::from_weather(weather, curve, panel_rating);
    optimal_beta_for_profile(&unit, capacity_c, demand_all_on, beta_grid)
}

pub fn optimal_beta_for_profile(
    unit: &UnitProfile,
    capacity_c: f64,
    demand_all_on: f64,
    beta_grid: &[f64],
) -> Result<MixChoice, EnergyError> {
    if beta_grid.is_empty() {
        return Err(EnergyError::EmptyBetaGrid);
    }
    let mut grid = beta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best: Option<MixChoice> = None;
    let mut last_err = None;
    for beta in grid {
        let sizing = match size_from_profile(beta, capacity_c, unit, demand_all_on) {
            Ok(s) => s,
            Err(e @ EnergyError::UnsatisfiableShare { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let avg = average_green_ratio(&sizing, unit, demand_all_on);
        if best.is_none_or(|b| avg > b.avg_green_ratio) {
            best = Some(MixChoice {
                beta,
                avg_green_ratio: avg,
                sizing,
            });
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(last_err.unwrap_or(EnergyError::EmptyBetaGrid)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weather::{HourReading, WeatherSeries};

    fn cisco(cards: usize) -> RouterEnergyProfile {
        RouterEnergyProfile::uniform(210.0, 70.0, cards).unwrap()
    }

    fn supply(w: f64) -> RenewableSupply {
        RenewableSupply {
            wind_power: w,
            solar_power: 0.0,
        }
    }

    #[test]
    fn demand_of_four_card_router() {
        let p = cisco(4);
        assert_eq!(power_demand(&p, &PowerState::all_on(4)).unwrap(), 490.0);
        assert_eq!(power_demand(&p, &PowerState::all_off(4)).unwrap(), 0.0);
        let half = cisco(2);
        let st = PowerState::from_line_cards(vec![true, false]);
        assert_eq!(power_demand(&half, &st).unwrap(), 280.0);
    }

    #[test]
    fn demand_rejects_mismatched_state() {
        let err = power_demand(&cisco(3), &PowerState::all_on(2)).unwrap_err();
        assert_eq!(err, EnergyError::DimensionMismatch { profile: 3, state: 2 });
    }

    #[test]
    fn chassis_tracks_line_cards() {
        let mut st = PowerState::all_off(3);
        assert!(!st.chassis_on());
        st.set_line_card(1, true);
        assert!(st.chassis_on());
        st.set_line_card(1, false);
        assert!(!st.chassis_on());
    }

    #[test]
    fn profile_validation() {
        assert!(RouterEnergyProfile::uniform(0.0, 70.0, 2).is_err());
        assert!(RouterEnergyProfile::uniform(210.0, -1.0, 2).is_err());
    }

    #[test]
    fn solar_supply_scales_with_ghi() {
        let sizing = InfrastructureSizing {
            wind_scale: 0.0,
            solar_scale: 1.0,
            beta: 0.0,
            capacity_c: 1.0,
        };
        let curve = TurbinePowerCurve::hy5();
        let s = renewable_supply(&sizing, 0.0, 1000.0, &curve, 4000.0);
        assert_eq!(s.solar_power, 4000.0);
        let s = renewable_supply(&sizing, 0.0, 500.0, &curve, 4000.0);
        // 4000 W · 500/1000
        assert_eq!(s.solar_power, 2000.0);
    }

    #[test]
    fn wind_below_cut_in_is_zero() {
        let sizing = InfrastructureSizing {
            wind_scale: 3.0,
            solar_scale: 0.0,
            beta: 1.0,
            capacity_c: 1.0,
        };
        let curve = TurbinePowerCurve::hy5();
        let cut_in = curve.points()[0].0;
        let s = renewable_supply(&sizing, cut_in * 0.5, 0.0, &curve, 4000.0);
        assert_eq!(s.wind_power, 0.0);
        assert_eq!(curve.power_at(100.0), 0.0);
    }

    #[test]
    fn curve_interpolates_linearly() {
        let c = TurbinePowerCurve::new(vec![(2.0, 0.0), (4.0, 100.0), (10.0, 400.0)]).unwrap();
        assert_eq!(c.power_at(3.0), 50.0);
        assert_eq!(c.power_at(7.0), 250.0);
        assert_eq!(c.power_at(10.0), 400.0);
        assert_eq!(c.power_at(10.5), 0.0);
        assert!(TurbinePowerCurve::new(vec![(2.0, 0.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn green_ratio_branches() {
        assert_eq!(green_ratio(&supply(600.0), 490.0), 1.0);
        assert_eq!(green_ratio(&supply(245.0), 490.0), 0.5);
        assert_eq!(green_ratio(&supply(0.0), 490.0), 0.0);
        assert_eq!(green_ratio(&supply(0.0), 0.0), 1.0);
    }

    #[test]
    fn brown_power_branches() {
        let p = cisco(4);
        let on = PowerState::all_on(4);
        assert_eq!(brown_power(&supply(600.0), &p, &on).unwrap(), 0.0);
        assert_eq!(brown_power(&supply(200.0), &p, &on).unwrap(), 290.0);
        assert_eq!(brown_power(&supply(0.0), &p, &PowerState::all_off(4)).unwrap(), 0.0);
    }

    #[test]
    fn savings_edge_cases() {
        let profiles = vec![cisco(4), cisco(4)];
        let rec = |router, state| RouterHour {
            router,
            state,
            supply: RenewableSupply::default(),
        };
        let all_on = [rec(0, PowerState::all_on(4)), rec(1, PowerState::all_on(4))];
        assert_eq!(brown_savings(&all_on, &profiles).unwrap().savings, 0.0);
        let all_off = [rec(0, PowerState::all_off(4)), rec(1, PowerState::all_off(4))];
        assert_eq!(brown_savings(&all_off, &profiles).unwrap().savings, 1.0);
        // 2 routers × 490 W baseline, one of them switched off: 1 − 490/980
        let one_off = [rec(0, PowerState::all_on(4)), rec(1, PowerState::all_off(4))];
        assert_eq!(brown_savings(&one_off, &profiles).unwrap().savings, 0.5);
    }

    #[test]
    fn savings_of_fully_green_network_is_flagged() {
        let profiles = vec![cisco(2)];
        let recs = [RouterHour {
            router: 0,
            state: PowerState::all_on(2),
            supply: supply(1000.0),
        }];
        let s = brown_savings(&recs, &profiles).unwrap();
        assert!(s.fully_green);
        assert_eq!(s.savings, 0.0);
    }

    fn series(readings: Vec<(f64, f64)>) -> WeatherSeries {
        WeatherSeries::new(
            "X",
            readings
                .into_iter()
                .map(|(wind_speed, ghi)| HourReading { wind_speed, ghi })
                .collect(),
        )
    }

    #[test]
    fn sizing_all_solar() {
        let w = series(vec![(0.0, 0.0), (0.0, 500.0), (0.0, 1000.0), (0.0, 250.0)]);
        let s = size_infrastructure(0.0, 2.0, &w, 490.0, &TurbinePowerCurve::hy5(), 4000.0).unwrap();
        assert_eq!(s.wind_scale, 0.0);
        assert!((s.solar_scale * 4000.0 - 980.0).abs() < 1e-9);
    }

    #[test]
    fn sizing_all_wind_uses_unit_peak() {
        let curve = TurbinePowerCurve::hy5();
        let w = series(vec![(6.0, 0.0), (14.0, 0.0), (3.0, 0.0)]);
        let peak = curve.power_at(14.0);
        assert_eq!(peak, 5400.0);
        let s = size_infrastructure(1.0, 1.0, &w, 490.0, &curve, 4000.0).unwrap();
        assert!((s.wind_scale - 490.0 / 5400.0).abs() < 1e-15);
        assert_eq!(s.solar_scale, 0.0);
    }

    #[test]
    fn sizing_zero_capacity_and_unsatisfiable() {
        let curve = TurbinePowerCurve::hy5();
        let calm = series(vec![(0.0, 800.0), (1.0, 100.0)]);
        let s = size_infrastructure(0.7, 0.0, &calm, 490.0, &curve, 4000.0).unwrap();
        assert_eq!((s.wind_scale, s.solar_scale), (0.0, 0.0));
        let err = size_infrastructure(1.0, 1.0, &calm, 490.0, &curve, 4000.0).unwrap_err();
        assert_eq!(err, EnergyError::UnsatisfiableShare { source_kind: "wind" });
    }

    #[test]
    fn optimal_beta_extremes() {
        let curve = TurbinePowerCurve::hy5();
        let calm = series((0..48).map(|h| (0.0, if h % 24 == 12 { 900.0 } else { 0.0 })).collect());
        let dark = series((0..48).map(|h| (5.0 + (h % 5) as f64, 0.0)).collect());
        let grid = default_beta_grid();
        assert_eq!(
            optimal_beta(&calm, 2.0, 490.0, &curve, 4000.0, &grid).unwrap().beta,
            0.0
        );
        assert_eq!(
            optimal_beta(&dark, 2.0, 490.0, &curve, 4000.0, &grid).unwrap().beta,
            1.0
        );
        assert_eq!(
            optimal_beta(&dark, 2.0, 490.0, &curve, 4000.0, &[]).unwrap_err(),
            EnergyError::EmptyBetaGrid
        );
    }

    #[test]
    fn bundled_curves_hit_the_stated_ratio() {
        let six_small = 6.0 * TurbinePowerCurve::hy5().power_at(6.0);
        let large = TurbinePowerCurve::hy30().power_at(6.0);
        assert!((six_small / large - 2.9).abs() <= 0.1);
        assert_eq!(TurbinePowerCurve::hy5().rated_power(), 5400.0);
        assert_eq!(TurbinePowerCurve::hy30().rated_power(), 30000.0);
    }
}
