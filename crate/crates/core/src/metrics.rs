//! Reduction of hourly counters into the five evaluation metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::caching::Strategy;
use crate::energy::{BrownLedger, BrownSavings};
use crate::sim::{HourlyCounters, Scenario};
use crate::weather::Season;

/// Sums of the counters that the metrics are ratios of.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub requests: u64,
    pub hits: u64,
    pub hop_units: u64,
    pub baseline_hop_units: u64,
    pub green_packets: f64,
    pub brown_packets: f64,
    pub brown_wh: f64,
    pub baseline_brown_wh: f64,
}

impl Totals {
    pub fn of_hour(h: &HourlyCounters) -> Self {
        Self {
            requests: h.requests,
            hits: h.hits,
            hop_units: h.hop_units,
            baseline_hop_units: h.baseline_hop_units,
            green_packets: h.green_packets(),
            brown_packets: h.brown_packets(),
            brown_wh: h.brown_wh,
            baseline_brown_wh: h.baseline_brown_wh,
        }
    }

    pub fn add(&mut self, o: &Totals) {
        self.requests += o.requests;
        self.hits += o.hits;
        self.hop_units += o.hop_units;
        self.baseline_hop_units += o.baseline_hop_units;
        self.green_packets += o.green_packets;
        self.brown_packets += o.brown_packets;
        self.brown_wh += o.brown_wh;
        self.baseline_brown_wh += o.baseline_brown_wh;
    }

    pub fn sum<'a>(hours: impl IntoIterator<Item = &'a HourlyCounters>) -> Self {
        let mut t = Totals::default();
        for h in hours {
            t.add(&Totals::of_hour(h));
        }
        t
    }
}

/// Green-to-brown packet ratio; `Saturated` when no packet was brown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GreenBrownRatio {
    Finite(f64),
    Saturated,
    /// No packets at all.
    Absent,
}

impl GreenBrownRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            GreenBrownRatio::Finite(v) => Some(v),
            GreenBrownRatio::Saturated => Some(f64::INFINITY),
            GreenBrownRatio::Absent => None,
        }
    }
}

impl fmt::Display for GreenBrownRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreenBrownRatio::Finite(v) => write!(f, "{v}"),
            GreenBrownRatio::Saturated => f.write_str("inf"),
            GreenBrownRatio::Absent => Ok(()),
        }
    }
}

/// Requests served by a router rather than the origin; `None` without requests.
pub fn hit_rate(t: &Totals) -> Option<f64> {
    (t.requests > 0).then(|| t.hits as f64 / t.requests as f64)
}

pub fn footprint_reduction(t: &Totals) -> Option<f64> {
    (t.baseline_hop_units > 0).then(|| 1.0 - t.hop_units as f64 / t.baseline_hop_units as f64)
}

pub fn green_brown_ratio(t: &Totals) -> GreenBrownRatio {
    if t.brown_packets > 0.0 {
        GreenBrownRatio::Finite(t.green_packets / t.brown_packets)
    } else if t.green_packets > 0.0 {
        GreenBrownRatio::Saturated
    } else {
        GreenBrownRatio::Absent
    }
}

pub fn brown_packet_reduction(t: &Totals, baseline: &Totals) -> Option<f64> {
    (baseline.brown_packets > 0.0).then(|| 1.0 - t.brown_packets / baseline.brown_packets)
}

pub fn brown_energy_savings(t: &Totals) -> BrownSavings {
    BrownLedger {
        actual_wh: t.brown_wh,
        baseline_wh: t.baseline_brown_wh,
    }
    .savings()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub alpha: f64,
    pub season: Season,
    pub strategy: Strategy,
    pub scenario: Scenario,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub hit_rate: Option<f64>,
    pub footprint_reduction: Option<f64>,
    pub green_brown_ratio: GreenBrownRatio,
    pub brown_packet_reduction: Option<f64>,
    pub brown_energy_savings: BrownSavings,
}

impl MetricValues {
    pub fn from_totals(t: &Totals, baseline: &Totals) -> Self {
        Self {
            hit_rate: hit_rate(t),
            footprint_reduction: footprint_reduction(t),
            green_brown_ratio: green_brown_ratio(t),
            brown_packet_reduction: brown_packet_reduction(t, baseline),
            brown_energy_savings: brown_energy_savings(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourMetrics {
    pub hour: usize,
    pub warmup: bool,
    pub totals: Totals,
    pub values: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub summary: MetricValues,
    pub totals: Totals,
    pub baseline_totals: Totals,
    pub failed_discoveries: u64,
    pub hours: Vec<HourMetrics>,
}

/// Aggregates a run against its baseline run. The first `warmup` hours are
/// reported per hour but left out of the summary. Baseline hours are matched
/// by hour index.
pub fn summarize(meta: RunMeta, hours: &[HourlyCounters], baseline: &[HourlyCounters], warmup: usize) -> MetricsReport {
    let base_of = |hour: usize| {
        baseline
            .iter()
            .find(|b| b.hour == hour)
            .map(Totals::of_hour)
            .unwrap_or_default()
    };
    let mut totals = Totals::default();
    let mut baseline_totals = Totals::default();
    let mut per_hour = Vec::with_capacity(hours.len());
    for (i, h) in hours.iter().enumerate() {
        let t = Totals::of_hour(h);
        let b = base_of(h.hour);
        let warm = i < warmup;
        if !warm {
            totals.add(&t);
            baseline_totals.add(&b);
        }
        per_hour.push(HourMetrics {
            hour: h.hour,
            warmup: warm,
            totals: t,
            values: MetricValues::from_totals(&t, &b),
        });
    }
    MetricsReport {
        meta,
        summary: MetricValues::from_totals(&totals, &baseline_totals),
        totals,
        baseline_totals,
        failed_discoveries: hours.iter().map(|h| h.discovery_failures).sum(),
        hours: per_hour,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn totals(requests: u64, hits: u64, green: f64, brown: f64) -> Totals {
        Totals {
            requests,
            hits,
            green_packets: green,
            brown_packets: brown,
            ..Totals::default()
        }
    }

    #[test]
    fn hit_rates() {
        assert_eq!(hit_rate(&totals(10, 0, 0.0, 0.0)), Some(0.0));
        assert_eq!(hit_rate(&totals(10, 10, 0.0, 0.0)), Some(1.0));
        assert_eq!(hit_rate(&totals(10, 3, 0.0, 0.0)), Some(0.3));
        assert_eq!(hit_rate(&totals(0, 0, 0.0, 0.0)), None);
    }

    #[test]
    fn footprints() {
        let mut t = Totals {
            hop_units: 40,
            baseline_hop_units: 40,
            ..Totals::default()
        };
        assert_eq!(footprint_reduction(&t), Some(0.0));
        t.hop_units = 20;
        assert_eq!(footprint_reduction(&t), Some(0.5));
        t.hop_units = 60;
        assert!(footprint_reduction(&t).unwrap() < 0.0);
        t.baseline_hop_units = 0;
        assert_eq!(footprint_reduction(&t), None);
    }

    #[test]
    fn green_brown() {
        assert_eq!(green_brown_ratio(&totals(0, 0, 10.0, 0.0)), GreenBrownRatio::Saturated);
        assert_eq!(green_brown_ratio(&totals(0, 0, 5.0, 5.0)), GreenBrownRatio::Finite(1.0));
        let r = green_brown_ratio(&totals(0, 0, 8.0, 2.0)).value().unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert_eq!(green_brown_ratio(&Totals::default()), GreenBrownRatio::Absent);
        assert_eq!(GreenBrownRatio::Saturated.to_string(), "inf");
    }

    #[test]
    fn brown_packets() {
        let t = totals(0, 0, 0.0, 10.0);
        assert_eq!(brown_packet_reduction(&t, &t), Some(0.0));
        assert_eq!(brown_packet_reduction(&totals(0, 0, 0.0, 5.0), &t), Some(0.5));
        assert_eq!(brown_packet_reduction(&t, &Totals::default()), None);
    }

    #[test]
    fn energy_savings_delegates() {
        let t = Totals {
            brown_wh: 245.0,
            baseline_brown_wh: 490.0,
            ..Totals::default()
        };
        assert_eq!(brown_energy_savings(&t).savings, 0.5);
        assert!(brown_energy_savings(&Totals::default()).fully_green);
    }
}
