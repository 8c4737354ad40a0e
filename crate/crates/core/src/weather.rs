//! Hourly wind-speed and irradiance series per location.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HOURS_PER_YEAR: usize = 8760;
pub const HOURS_PER_WEEK: usize = 168;

const CSV_HEADER: [&str; 4] = ["location_id", "hour", "wind_speed_mps", "ghi_wm2"];
const OFFSET_COLUMN: &str = "hour_offset";

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("weather csv: {0}")]
    Io(#[from] std::io::Error),
    #[error("weather csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("weather csv: header must start with `location_id,hour,wind_speed_mps,ghi_wm2`, found `{0}`")]
    BadHeader(String),
    #[error("weather csv line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("weather csv: location {location}: {}", describe_gaps(.gaps))]
    Gaps { location: String, gaps: Vec<usize> },
    #[error("weather csv line {line}: duplicate hour {hour} for location {location}")]
    DuplicateHour { line: u64, location: String, hour: usize },
    #[error("weather csv: location {location} has conflicting hour offsets")]
    ConflictingOffset { location: String },
    #[error("season window {window} does not fit a {horizon}-hour series")]
    WindowOutOfRange { window: String, horizon: usize },
    #[error("synthetic weather needs at least 24 hours, got {0}")]
    HorizonTooShort(usize),
    #[error("invalid synthetic profile: {0}")]
    InvalidProfile(String),
}

fn describe_gaps(gaps: &[usize]) -> String {
    let listed: Vec<String> = gaps.iter().take(10).map(|h| h.to_string()).collect();
    let more = if gaps.len() > 10 {
        format!(" (and {} more)", gaps.len() - 10)
    } else {
        String::new()
    };
    if gaps.len() == 1 {
        format!("gap at hour {}", listed[0])
    } else {
        format!("gaps at hours {}{more}", listed.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourReading {
    pub wind_speed: f64,
    pub ghi: f64,
}

/// Contiguous hourly readings for one location; the hour index is the
/// position in `readings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    location_id: String,
    readings: Vec<HourReading>,
}

impl WeatherSeries {
    /// Builds a series, clamping negative or NaN readings to zero.
    pub fn new(location_id: impl Into<String>, mut readings: Vec<HourReading>) -> Self {
        for r in &mut readings {
            r.wind_speed = clamp_reading(r.wind_speed).0;
            r.ghi = clamp_reading(r.ghi).0;
        }
        Self {
            location_id: location_id.into(),
            readings,
        }
    }

    pub fn location_id(&self) -> &str {
        &self.location_id
    }

    pub fn readings(&self) -> &[HourReading] {
        &self.readings
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn at(&self, hour: usize) -> HourReading {
        self.readings[hour]
    }
}

fn clamp_reading(v: f64) -> (f64, bool) {
    if v >= 0.0 {
        (v, false)
    } else {
        (0.0, true)
    }
}

/// Series keyed by location, plus how many readings were clamped to zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherSet {
    pub series: BTreeMap<String, WeatherSeries>,
    pub clamped_readings: usize,
}

impl WeatherSet {
    pub fn get(&self, location_id: &str) -> Option<&WeatherSeries> {
        self.series.get(location_id)
    }
}

pub fn load_weather_csv(path: impl AsRef<Path>) -> Result<WeatherSet, WeatherError> {
    let file = std::fs::File::open(path)?;
    read_weather_csv(file)
}

/// Reads the `location_id,hour,wind_speed_mps,ghi_wm2[,hour_offset]` format.
///
/// An optional `hour_offset` column shifts a location's local hours onto the
/// reference clock: the reading at local hour `h` is stored at
/// `(h + offset) mod horizon`.
pub fn read_weather_csv(reader: impl Read) -> Result<WeatherSet, WeatherError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 4 || names[..4] != CSV_HEADER {
        return Err(WeatherError::BadHeader(names.join(",")));
    }
    let offset_col = names.iter().position(|n| *n == OFFSET_COLUMN);

    struct Pending {
        hours: BTreeMap<usize, HourReading>,
        offset: Option<i64>,
    }
    let mut pending: BTreeMap<String, Pending> = BTreeMap::new();
    let mut clamped = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, what: &str| -> Result<&str, WeatherError> {
            record
                .get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| WeatherError::Malformed {
                    line,
                    reason: format!("missing {what}"),
                })
        };
        let number = |i: usize, what: &str| -> Result<f64, WeatherError> {
            let raw = field(i, what)?;
            raw.parse::<f64>().map_err(|_| WeatherError::Malformed {
                line,
                reason: format!("{what} `{raw}` is not a number"),
            })
        };
        let location = field(0, "location_id")?.to_string();
        let raw_hour = field(1, "hour")?;
        let hour: usize = raw_hour.parse().map_err(|_| WeatherError::Malformed {
            line,
            reason: format!("hour `{raw_hour}` is not a non-negative integer"),
        })?;
        let (wind_speed, c1) = clamp_reading(number(2, "wind_speed_mps")?);
        let (ghi, c2) = clamp_reading(number(3, "ghi_wm2")?);
        clamped += usize::from(c1) + usize::from(c2);
        let offset = match offset_col {
            Some(i) if record.get(i).is_some_and(|s| !s.is_empty()) => {
                let raw = record.get(i).unwrap_or_default();
                Some(raw.parse::<i64>().map_err(|_| WeatherError::Malformed {
                    line,
                    reason: format!("hour_offset `{raw}` is not an integer"),
                })?)
            }
            _ => None,
        };

        let entry = pending.entry(location.clone()).or_insert(Pending {
            hours: BTreeMap::new(),
            offset,
        });
        if entry.offset != offset {
            return Err(WeatherError::ConflictingOffset { location });
        }
        if entry.hours.insert(hour, HourReading { wind_speed, ghi }).is_some() {
            return Err(WeatherError::DuplicateHour { line, location, hour });
        }
    }

    let mut series = BTreeMap::new();
    for (location, p) in pending {
        let horizon = p.hours.keys().next_back().map_or(0, |h| h + 1);
        let gaps: Vec<usize> = (0..horizon).filter(|h| !p.hours.contains_key(h)).collect();
        if !gaps.is_empty() {
            return Err(WeatherError::Gaps { location, gaps });
        }
        let mut readings: Vec<HourReading> = p.hours.into_values().collect();
        if let Some(offset) = p.offset {
            let shift = offset.rem_euclid(horizon as i64) as usize;
            readings.rotate_right(shift);
        }
        series.insert(
            location.clone(),
            WeatherSeries {
                location_id: location,
                readings,
            },
        );
    }
    Ok(WeatherSet {
        series,
        clamped_readings: clamped,
    })
}

/// Writes series in the same format `read_weather_csv` accepts, in reference
/// time (no offset column).
pub fn write_weather_csv<'a>(
    writer: impl Write,
    series: impl IntoIterator<Item = &'a WeatherSeries>,
) -> Result<(), WeatherError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for s in series {
        for (hour, r) in s.readings.iter().enumerate() {
            w.write_record([
                s.location_id.clone(),
                hour.to_string(),
                r.wind_speed.to_string(),
                r.ghi.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parameters of the synthetic weather generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    /// Clear-sky noon irradiance at the seasonal mean, W/m².
    pub solar_amplitude: f64,
    /// Mean hourly wind speed, m/s.
    pub wind_mean: f64,
    /// Variance of hourly wind speed, (m/s)².
    pub wind_variance: f64,
    /// Relative swing of irradiance between winter and summer, in [0,1].
    pub seasonal_modulation: f64,
}

/// Hours of the day with sunlight; irradiance is zero outside `(SUNRISE, SUNSET)`.
pub const SUNRISE_HOUR: usize = 6;
pub const SUNSET_HOUR: usize = 18;
const SUMMER_SOLSTICE_DAY: f64 = 171.0;

pub fn is_night(hour: usize) -> bool {
    let h = hour % 24;
    h <= SUNRISE_HOUR || h >= SUNSET_HOUR
}

/// Deterministic artificial weather: a half-sine irradiance bump between
/// sunrise and sunset, modulated by a yearly cosine peaking at the June
/// solstice, and gamma-distributed hourly wind with the requested mean and
/// variance.
pub fn synthesize_weather(
    location_id: impl Into<String>,
    seed: u64,
    profile: &SyntheticProfile,
    horizon_hours: usize,
) -> Result<WeatherSeries, WeatherError> {
    if horizon_hours < 24 {
        return Err(WeatherError::HorizonTooShort(horizon_hours));
    }
    let SyntheticProfile {
        solar_amplitude,
        wind_mean,
        wind_variance,
        seasonal_modulation,
    } = *profile;
    if !(solar_amplitude >= 0.0 && wind_mean >= 0.0 && wind_variance >= 0.0) {
        return Err(WeatherError::InvalidProfile(
            "amplitude, mean and variance must be non-negative".into(),
        ));
    }
    if !(0.0..=1.0).contains(&seasonal_modulation) {
        return Err(WeatherError::InvalidProfile(format!(
            "seasonal modulation {seasonal_modulation} outside [0,1]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = if wind_mean > 0.0 && wind_variance > 0.0 {
        let shape = wind_mean * wind_mean / wind_variance;
        let scale = wind_variance / wind_mean;
        Some(Gamma::new(shape, scale).map_err(|e| WeatherError::InvalidProfile(e.to_string()))?)
    } else {
        None
    };

    let day_len = (SUNSET_HOUR - SUNRISE_HOUR) as f64;
    let readings = (0..horizon_hours)
        .map(|t| {
            let h = t % 24;
            let ghi = if is_night(t) {
                0.0
            } else {
                let day = (t / 24) as f64;
                let season = 1.0
                    + seasonal_modulation * (2.0 * std::f64::consts::PI * (day - SUMMER_SOLSTICE_DAY) / 365.0).cos();
                let bump = (std::f64::consts::PI * (h - SUNRISE_HOUR) as f64 / day_len).sin();
                (solar_amplitude * season * bump).max(0.0)
            };
            let wind_speed = match &gamma {
                Some(g) => g.sample(&mut rng),
                None => wind_mean,
            };
            HourReading { wind_speed, ghi }
        })
        .collect();
    Ok(WeatherSeries {
        location_id: location_id.into(),
        readings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    pub fn name(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
        }
    }

    /// Default observation window in a non-leap year starting 1 January 00:00.
    pub fn default_window(self) -> SeasonWindow {
        // (first day-of-year, 1-based; number of days)
        let (first_day, days) = match self {
            Season::Winter => (1, 7),    // 1–7 Jan
            Season::Spring => (96, 7),   // 6–12 Apr
            Season::Summer => (192, 17), // 11–27 Jul
            Season::Fall => (294, 7),    // 21–27 Oct
        };
        SeasonWindow {
            name: self,
            start_hour: (first_day - 1) * 24,
            length_hours: days * 24,
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "winter" => Ok(Season::Winter),
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "fall" | "autumn" => Ok(Season::Fall),
            other => Err(format!("unknown season `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonWindow {
    pub name: Season,
    pub start_hour: usize,
    pub length_hours: usize,
}

impl SeasonWindow {
    pub fn end_hour(&self) -> usize {
        self.start_hour + self.length_hours
    }

    pub fn fits(&self, horizon: usize) -> bool {
        self.length_hours > 0 && self.end_hour() <= horizon
    }
}

/// The window's hours as a new series re-based to hour 0.
pub fn season_slice(series: &WeatherSeries, window: &SeasonWindow) -> Result<WeatherSeries, WeatherError> {
    if !window.fits(series.len()) {
        return Err(WeatherError::WindowOutOfRange {
            window: format!("{} [{}, {})", window.name, window.start_hour, window.end_hour()),
            horizon: series.len(),
        });
    }
    Ok(WeatherSeries {
        location_id: series.location_id.clone(),
        readings: series.readings[window.start_hour..window.end_hour()].to_vec(),
    })
}
