//! Windowed descriptive statistics over station telemetry.
//!
//! Windows are half-open, `(now - window, now]`, so adjacent windows split
//! precipitation sums exactly. Missing measurements are skipped by every
//! statistic.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::WeatherReading;

pub const DEFAULT_WINDOWS_HOURS: [u32; 3] = [24, 48, 72];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeatherError {
    #[error("station summaries cover different windows")]
    MixedWindows,
    #[error("unknown station {0:?}")]
    UnknownStation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSummary {
    pub station_id: String,
    pub window_hours: u32,
    pub precip_sum_mm: Option<f64>,
    pub wind_max_kmh: Option<f64>,
    pub temp_mean_c: Option<f64>,
    /// Least-squares slope of temperature against time, °C per hour.
    pub temp_trend_c_per_hr: Option<f64>,
    /// Readings in the window with at least one measurement.
    pub sample_count: usize,
    /// Readings in the window with no measurement at all.
    pub missing_count: usize,
}

fn in_window(t: DateTime<Utc>, now: DateTime<Utc>, window_hours: u32) -> bool {
    t > now - Duration::hours(i64::from(window_hours)) && t <= now
}

/// Summary of `station_id`'s readings in `(now - window_hours, now]`.
/// Readings of other stations are ignored.
pub fn summarize_station(
    station_id: &str,
    readings: &[WeatherReading],
    now: DateTime<Utc>,
    window_hours: u32,
) -> StationSummary {
    let window: Vec<&WeatherReading> = readings
        .iter()
        .filter(|r| r.station_id == station_id && in_window(r.timestamp, now, window_hours))
        .collect();
    let missing_count = window.iter().filter(|r| r.is_empty()).count();

    let precip: Vec<f64> = window.iter().filter_map(|r| r.precip_mm).collect();
    let wind: Vec<f64> = window.iter().filter_map(|r| r.wind_speed_kmh).collect();
    let temps: Vec<(f64, f64)> = window
        .iter()
        .filter_map(|r| {
            let hours = (r.timestamp - now).num_milliseconds() as f64 / 3_600_000.0;
            r.temp_c.map(|t| (hours, t))
        })
        .collect();

    StationSummary {
        station_id: station_id.to_string(),
        window_hours,
        precip_sum_mm: (!precip.is_empty()).then(|| precip.iter().sum()),
        wind_max_kmh: wind.iter().cloned().reduce(f64::max),
        temp_mean_c: (!temps.is_empty())
            .then(|| temps.iter().map(|(_, t)| t).sum::<f64>() / temps.len() as f64),
        temp_trend_c_per_hr: ols_slope(&temps),
        sample_count: window.len() - missing_count,
        missing_count,
    }
}

/// Slope of the least-squares line through `points`; needs two distinct x.
fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatAggregate {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Stations contributing a value.
    pub station_count: usize,
}

impl StatAggregate {
    fn over(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        Self {
            min: v.iter().cloned().reduce(f64::min),
            max: v.iter().cloned().reduce(f64::max),
            mean: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
            station_count: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalSummary {
    pub window_hours: Option<u32>,
    pub precip_sum_mm: StatAggregate,
    pub wind_max_kmh: StatAggregate,
    pub temp_mean_c: StatAggregate,
    pub temp_trend_c_per_hr: StatAggregate,
    pub stations: Vec<StationSummary>,
}

pub fn regional_summary(summaries: &[StationSummary]) -> Result<RegionalSummary, WeatherError> {
    let window_hours = summaries.first().map(|s| s.window_hours);
    if summaries.iter().any(|s| Some(s.window_hours) != window_hours) {
        return Err(WeatherError::MixedWindows);
    }
    Ok(RegionalSummary {
        window_hours,
        precip_sum_mm: StatAggregate::over(summaries.iter().map(|s| s.precip_sum_mm)),
        wind_max_kmh: StatAggregate::over(summaries.iter().map(|s| s.wind_max_kmh)),
        temp_mean_c: StatAggregate::over(summaries.iter().map(|s| s.temp_mean_c)),
        temp_trend_c_per_hr: StatAggregate::over(summaries.iter().map(|s| s.temp_trend_c_per_hr)),
        stations: summaries.to_vec(),
    })
}

/// Station ids in first-seen order.
pub fn station_ids(readings: &[WeatherReading]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for r in readings {
        if !ids.contains(&r.station_id) {
            ids.push(r.station_id.clone());
        }
    }
    ids
}

/// Summaries for every station, then their regional aggregate.
pub fn summarize_all(
    readings: &[WeatherReading],
    now: DateTime<Utc>,
    window_hours: u32,
) -> RegionalSummary {
    let summaries: Vec<StationSummary> = station_ids(readings)
        .iter()
        .map(|id| summarize_station(id, readings, now, window_hours))
        .collect();
    regional_summary(&summaries).expect("one window for all stations")
}

/// Raw readings of one station inside the window, newest first.
pub fn station_detail(
    station_id: &str,
    readings: &[WeatherReading],
    now: DateTime<Utc>,
    window_hours: u32,
) -> Result<Vec<WeatherReading>, WeatherError> {
    if !readings.iter().any(|r| r.station_id == station_id) {
        return Err(WeatherError::UnknownStation(station_id.to_string()));
    }
    let mut out: Vec<WeatherReading> = readings
        .iter()
        .filter(|r| r.station_id == station_id && in_window(r.timestamp, now, window_hours))
        .cloned()
        .collect();
    out.sort_by_key(|r| std::cmp::Reverse(r.timestamp));
    Ok(out)
}
