//! Seeded synthetic datasets for tests and demos.
//!
//! Output is a pure function of the [`SynthConfig`] and the active
//! [`Config`]. Sizes follow a truncated geometric distribution over the nine
//! size classes, so small avalanches dominate. One in ten aspects covers the
//! full circle. Exactly `round(ordinal_fraction * n)` counts are ordinal.

use chrono::{Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::model::{
    AspectInterval, AvalancheCount, DestructiveSize, ElevationInterval, OperationTenure, Report,
    WeatherReading, UNSPECIFIED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_operations: usize,
    pub n_days: usize,
    pub reports_per_day_min: usize,
    pub reports_per_day_max: usize,
    pub ordinal_fraction: f64,
    pub n_stations: usize,
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_operations: 6,
            n_days: 3,
            reports_per_day_min: 4,
            reports_per_day_max: 12,
            ordinal_fraction: 0.3,
            n_stations: 5,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 14).unwrap(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(&'static str),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_operations == 0 || self.n_days == 0 || self.n_stations == 0 {
            return Err(SynthError::InvalidConfig("operation, day and station counts must be positive"));
        }
        if self.reports_per_day_min == 0 || self.reports_per_day_min > self.reports_per_day_max {
            return Err(SynthError::InvalidConfig("need 0 < reports_per_day_min <= reports_per_day_max"));
        }
        if !(0.0..=1.0).contains(&self.ordinal_fraction) {
            return Err(SynthError::InvalidConfig("ordinal_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub reports: Vec<Report>,
    pub tenures: Vec<OperationTenure>,
    pub weather: Vec<WeatherReading>,
}

const OPERATION_NAMES: &[&str] = &[
    "Bald Ridge Heli", "Cedar Pass Cat", "Goat Range Lodge", "Hollow Creek Resort",
    "Iron Mountain Guides", "Juniper Highway Crew", "Kestrel Rail Corridor", "Larch Basin Touring",
    "Marmot Bowl Ski Area", "North Fork Heli",
];

const COMMENTS: &[&str] = &[
    "",
    "size 2 storm slabs on lee features",
    "widespread loose dry sluffing in steep terrain",
    "cornice failures triggered small slabs below",
    "remote triggered from 30 m away on a convex roll",
    "visibility limited; observed from valley bottom only",
    "numerous results on explosive control route",
    "wind slabs on cross-loaded gullies below ridge crest",
    "persistent slab stepped down to the early January layer",
];

/// Relative weights of size classes 1.0..=5.0; each step is 0.55 times the
/// previous one.
fn size_weights() -> Vec<f64> {
    (0..9).map(|k| 0.55f64.powi(k)).collect()
}

fn draw_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [String]) -> &'a str {
    &items[rng.random_range(0..items.len())]
}

pub fn generate_synthetic(synth: &SynthConfig, config: &Config) -> Result<SyntheticData, SynthError> {
    synth.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(synth.seed);
    let tenures = generate_tenures(&mut rng, synth.n_operations);
    let reports = generate_reports(&mut rng, synth, config, &tenures);
    let weather = generate_weather(&mut rng, synth);
    Ok(SyntheticData {
        reports,
        tenures,
        weather,
    })
}

fn generate_tenures(rng: &mut ChaCha8Rng, n: usize) -> Vec<OperationTenure> {
    let cols = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|i| {
            let cx = -118.6 + 0.6 * (i % cols) as f64;
            let cy = 50.2 + 0.6 * (i / cols) as f64;
            let vertices = rng.random_range(7..=11);
            let base = rng.random_range(0.12..0.25);
            let ring: Vec<[f64; 2]> = (0..vertices)
                .map(|v| {
                    // star-shaped about the centre with increasing angle, hence simple
                    let t = (v as f64 + rng.random_range(-0.3..0.3)) / vertices as f64 * std::f64::consts::TAU;
                    let rad = base * rng.random_range(0.6..1.0);
                    let lon = cx + rad * t.cos();
                    let lat = cy + rad * t.sin();
                    [(lon * 1e5).round() / 1e5, (lat * 1e5).round() / 1e5]
                })
                .collect();
            let name = OPERATION_NAMES
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("Operation {}", i + 1));
            OperationTenure::new(format!("op-{:02}", i + 1), name, vec![ring])
                .expect("star-shaped rings are valid")
        })
        .collect()
}

fn generate_reports(
    rng: &mut ChaCha8Rng,
    synth: &SynthConfig,
    config: &Config,
    tenures: &[OperationTenure],
) -> Vec<Report> {
    let per_day: Vec<usize> = (0..synth.n_days)
        .map(|_| rng.random_range(synth.reports_per_day_min..=synth.reports_per_day_max))
        .collect();
    let total: usize = per_day.iter().sum();
    let n_ordinal = (synth.ordinal_fraction * total as f64).round() as usize;
    let mut ordinal_slots: Vec<bool> = (0..total).map(|i| i < n_ordinal).collect();
    ordinal_slots.shuffle(rng);

    let weights = size_weights();
    let bins = config.bins.bins();
    let triggers = &config.vocabulary.triggers;
    let problems = &config.vocabulary.problem_types;
    let mut reports = Vec::with_capacity(total);
    let mut idx = 0;
    for (day, &n) in per_day.iter().enumerate() {
        let occurred_on = synth.start_date + Duration::days(day as i64);
        for _ in 0..n {
            let tenure = &tenures[rng.random_range(0..tenures.len())];
            let lag_days = i64::from(rng.random_bool(0.3));
            let hour = rng.random_range(7..20);
            let minute = 5 * rng.random_range(0..12);
            let reported_at = Utc.from_utc_datetime(
                &(occurred_on + Duration::days(lag_days))
                    .and_time(NaiveTime::from_hms_opt(hour, minute, 0).unwrap()),
            );
            let count = if ordinal_slots[idx] && !bins.is_empty() {
                AvalancheCount::Ordinal(bins[rng.random_range(0..bins.len())].clone())
            } else if rng.random_bool(0.03) {
                AvalancheCount::numeric(0)
            } else {
                // roughly geometric, mostly single digits
                let mut k = 1u32;
                while k < 40 && rng.random_bool(0.72) {
                    k += 1;
                }
                AvalancheCount::numeric(k)
            };
            let size = DestructiveSize::from_half_steps(2 + draw_weighted(rng, &weights) as u8)
                .expect("class index in range");
            let aspect = if rng.random_bool(0.1) {
                AspectInterval::full()
            } else {
                let start = if rng.random_bool(0.7) {
                    45.0 * f64::from(rng.random_range(0..8))
                } else {
                    f64::from(rng.random_range(0..360))
                };
                let sweep = 45.0 * f64::from(rng.random_range(0..5));
                AspectInterval::new(start, (start + sweep) % 360.0, false).expect("angles in range")
            };
            let min_m = 100.0 * f64::from(rng.random_range(8..27));
            let max_m = (min_m + 100.0 * f64::from(rng.random_range(0..10))).min(9000.0);
            let elevation = ElevationInterval::new(min_m, max_m).expect("ordered in range");
            let trigger = if rng.random_bool(0.05) {
                UNSPECIFIED.to_string()
            } else {
                pick(rng, triggers).to_string()
            };
            let problem_type = if rng.random_bool(0.05) {
                UNSPECIFIED.to_string()
            } else {
                pick(rng, problems).to_string()
            };
            reports.push(Report {
                report_id: format!("r{:05}", idx + 1),
                operation_id: tenure.operation_id.clone(),
                reported_at,
                occurred_on,
                count,
                size,
                trigger,
                problem_type,
                elevation,
                aspect,
                percent_observed: 5 * rng.random_range(1..=20u8),
                comment: COMMENTS[rng.random_range(0..COMMENTS.len())].to_string(),
            });
            idx += 1;
        }
    }
    reports
}

fn generate_weather(rng: &mut ChaCha8Rng, synth: &SynthConfig) -> Vec<WeatherReading> {
    // hourly telemetry from two days before the window to its last hour
    let start = Utc.from_utc_datetime(&(synth.start_date - Duration::days(2)).and_time(NaiveTime::MIN));
    let hours = 24 * (synth.n_days + 2);
    let mut out = Vec::with_capacity(hours * synth.n_stations);
    for s in 0..synth.n_stations {
        let station_id = format!("wx-{:02}", s + 1);
        let mut temp: f64 = rng.random_range(-14.0..-2.0);
        for h in 0..hours {
            temp = (temp + rng.random_range(-0.8..0.8)).clamp(-40.0, 15.0);
            let missing = |rng: &mut ChaCha8Rng| rng.random_bool(0.03);
            let dead = rng.random_bool(0.01);
            let precip = if rng.random_bool(0.65) {
                0.0
            } else {
                (rng.random_range(0.0..4.0f64) * 10.0).round() / 10.0
            };
            let wind = (rng.random_range(0.0..70.0f64)).round();
            let dir = f64::from(rng.random_range(0..36)) * 10.0;
            let reading = WeatherReading {
                station_id: station_id.clone(),
                timestamp: start + Duration::hours(h as i64),
                precip_mm: (!dead && !missing(rng)).then_some(precip),
                wind_speed_kmh: (!dead && !missing(rng)).then_some(wind),
                wind_dir_deg: (!dead && !missing(rng)).then_some(dir),
                temp_c: (!dead && !missing(rng)).then_some((temp * 10.0).round() / 10.0),
            };
            out.push(reading);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{serialize_reports, serialize_tenures, serialize_weather, ReportFormat};
    use crate::model::CountVariant;

    fn gen(s: &SynthConfig) -> SyntheticData {
        generate_synthetic(s, &Config::default()).unwrap()
    }

    #[test]
    fn seed_is_deterministic() {
        let s = SynthConfig::default();
        let (a, b) = (gen(&s), gen(&s));
        assert_eq!(
            serialize_reports(&a.reports, ReportFormat::Jsonl),
            serialize_reports(&b.reports, ReportFormat::Jsonl)
        );
        assert_eq!(serialize_tenures(&a.tenures), serialize_tenures(&b.tenures));
        assert_eq!(serialize_weather(&a.weather), serialize_weather(&b.weather));
        let other = gen(&SynthConfig { seed: 7, ..s });
        assert_ne!(other.reports, a.reports);
    }

    #[test]
    fn zero_ordinal_fraction() {
        let d = gen(&SynthConfig { ordinal_fraction: 0.0, ..Default::default() });
        assert!(d.reports.iter().all(|r| r.count.variant() == CountVariant::Numeric));
    }

    #[test]
    fn three_day_window() {
        let s = SynthConfig { n_days: 3, ..Default::default() };
        let d = gen(&s);
        let last = s.start_date + Duration::days(2);
        assert!(d.reports.iter().all(|r| r.occurred_on >= s.start_date && r.occurred_on <= last));
    }

    #[test]
    fn ordinal_proportion_within_one() {
        for frac in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let d = gen(&SynthConfig { ordinal_fraction: frac, seed: 9, ..Default::default() });
            let n = d.reports.len() as f64;
            let k = d.reports.iter().filter(|r| r.count.variant() == CountVariant::Ordinal).count() as f64;
            assert!((k - frac * n).abs() <= 1.0, "frac {frac}: {k} of {n}");
        }
    }

    #[test]
    fn generated_data_satisfies_invariants() {
        let cfg = Config::default();
        let d = gen(&SynthConfig { n_days: 10, seed: 3, ..Default::default() });
        for r in &d.reports {
            assert!(r.occurred_on <= r.reported_at.date_naive());
            assert!(r.percent_observed <= 100);
            assert!(cfg.vocabulary.has_trigger(&r.trigger));
            assert!(cfg.vocabulary.has_problem_type(&r.problem_type));
            assert!(d.tenures.iter().any(|t| t.operation_id == r.operation_id));
        }
        for t in &d.tenures {
            crate::model::validate_rings(&t.rings).unwrap();
        }
        for pair in d.weather.windows(2) {
            if pair[0].station_id == pair[1].station_id {
                assert!(pair[0].timestamp < pair[1].timestamp);
            }
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let bad = SynthConfig { ordinal_fraction: 1.5, ..Default::default() };
        assert!(generate_synthetic(&bad, &Config::default()).is_err());
        let bad = SynthConfig { reports_per_day_min: 5, reports_per_day_max: 2, ..Default::default() };
        assert!(generate_synthetic(&bad, &Config::default()).is_err());
    }
}
