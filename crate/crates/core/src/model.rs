//! Report, terrain and count vocabulary.
//!
//! Everything downstream consumes these values. The central type is
//! [`AvalancheCount`]: a report states the number of avalanches either as a
//! plain number or as an ordinal bin label, and the two are never merged
//! into one representation. Any scalar derived from a count (for colour
//! darkness, say) is computed on demand by [`resolve_count_scalar`] and is
//! never written back.

use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Token used for a trigger or problem type the observer did not report.
pub const UNSPECIFIED: &str = "unspecified";

/// Upper bound accepted for elevations, in meters.
pub const MAX_ELEVATION_M: f64 = 9000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("ordinal bin label {0:?} is not in the active bin table")]
    UnknownBinLabel(String),
    #[error("invalid ordinal bin {label:?}: lo={lo} hi={hi:?}")]
    InvalidBin {
        label: String,
        lo: u32,
        hi: Option<u32>,
    },
    #[error("duplicate ordinal bin label {0:?}")]
    DuplicateBinLabel(String),
    #[error("elevation interval inverted: min {min} > max {max}")]
    ElevationInverted { min: f64, max: f64 },
    #[error("elevation {0} outside [0, 9000] m")]
    ElevationOutOfRange(f64),
    #[error("aspect angle {0} outside [0, 360)")]
    AspectOutOfRange(f64),
    #[error("size class {0} is not on the 1.0..=5.0 half-step scale")]
    InvalidSize(f64),
    #[error("percent observed {0} outside 0..=100")]
    InvalidPercent(i64),
    #[error("ring {ring} has {vertices} vertices, need at least 3")]
    RingTooShort { ring: usize, vertices: usize },
    #[error("ring {0} intersects itself")]
    SelfIntersecting(usize),
    #[error("polygon has no rings")]
    EmptyPolygon,
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
}

/// A labelled count range from the bin table, e.g. `several` = 2..=9.
///
/// `hi == None` marks an open bin with no upper bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBin")]
pub struct OrdinalBin {
    label: String,
    lo: u32,
    hi: Option<u32>,
}

#[derive(Deserialize)]
struct RawBin {
    label: String,
    lo: u32,
    hi: Option<u32>,
}

impl TryFrom<RawBin> for OrdinalBin {
    type Error = DomainError;

    fn try_from(raw: RawBin) -> Result<Self, Self::Error> {
        OrdinalBin::new(raw.label, raw.lo, raw.hi)
    }
}

impl OrdinalBin {
    pub fn new(label: impl Into<String>, lo: u32, hi: Option<u32>) -> Result<Self, DomainError> {
        let label = label.into();
        let bad = label.trim().is_empty() || lo < 1 || hi.is_some_and(|hi| hi < lo);
        if bad {
            return Err(DomainError::InvalidBin { label, lo, hi });
        }
        Ok(Self { label, lo, hi })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn hi(&self) -> Option<u32> {
        self.hi
    }

    /// Human-readable range, e.g. `2–9` or `10+`.
    pub fn range_text(&self) -> String {
        match self.hi {
            Some(hi) if hi == self.lo => format!("{}", self.lo),
            Some(hi) => format!("{}\u{2013}{}", self.lo, hi),
            None => format!("{}+", self.lo),
        }
    }
}

/// How many avalanches a report describes, in the form the observer chose.
///
/// The variant is part of the observation. No code path converts one variant
/// into the other.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AvalancheCount {
    Numeric { n: u32 },
    Ordinal(OrdinalBin),
}

impl AvalancheCount {
    pub fn numeric(n: u32) -> Self {
        AvalancheCount::Numeric { n }
    }

    pub fn variant(&self) -> CountVariant {
        match self {
            AvalancheCount::Numeric { .. } => CountVariant::Numeric,
            AvalancheCount::Ordinal(_) => CountVariant::Ordinal,
        }
    }

    /// Display form used in tooltips: the number, or `label (lo–hi)`.
    pub fn display_text(&self) -> String {
        match self {
            AvalancheCount::Numeric { n } => n.to_string(),
            AvalancheCount::Ordinal(bin) => format!("{} ({})", bin.label, bin.range_text()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountVariant {
    Numeric,
    Ordinal,
}

/// Ordered, label-unique list of ordinal bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalBinTable {
    bins: Vec<OrdinalBin>,
}

impl Default for OrdinalBinTable {
    /// `isolated` = 1, `several` = 2..=9, `numerous` = 10+. Only `several`
    /// comes from the recording standard; the others are editable defaults.
    fn default() -> Self {
        let bins = vec![
            OrdinalBin::new("isolated", 1, Some(1)).unwrap(),
            OrdinalBin::new("several", 2, Some(9)).unwrap(),
            OrdinalBin::new("numerous", 10, None).unwrap(),
        ];
        Self { bins }
    }
}

impl OrdinalBinTable {
    pub fn new(bins: Vec<OrdinalBin>) -> Result<Self, DomainError> {
        let mut seen = std::collections::HashSet::new();
        for bin in &bins {
            if !seen.insert(bin.label.to_lowercase()) {
                return Err(DomainError::DuplicateBinLabel(bin.label.clone()));
            }
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[OrdinalBin] {
        &self.bins
    }

    /// Case-insensitive lookup with surrounding whitespace ignored.
    pub fn lookup(&self, label: &str) -> Option<&OrdinalBin> {
        let needle = label.trim();
        self.bins
            .iter()
            .find(|bin| bin.label.eq_ignore_ascii_case(needle))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarPolicy {
    /// `(lo + hi) / 2`; open bins resolve to `lo`.
    #[default]
    Midpoint,
    /// Always `lo`.
    LowerBound,
}

/// Single number standing in for a count where an encoding needs one.
///
/// Ordinal bins are resolved against `table`, not against the bounds the
/// count happens to carry, so an edited table takes effect everywhere.
pub fn resolve_count_scalar(
    count: &AvalancheCount,
    table: &OrdinalBinTable,
    policy: ScalarPolicy,
) -> Result<f64, DomainError> {
    match count {
        AvalancheCount::Numeric { n } => Ok(f64::from(*n)),
        AvalancheCount::Ordinal(bin) => {
            let entry = table
                .lookup(&bin.label)
                .ok_or_else(|| DomainError::UnknownBinLabel(bin.label.clone()))?;
            let lo = f64::from(entry.lo);
            Ok(match (policy, entry.hi) {
                (ScalarPolicy::Midpoint, Some(hi)) => (lo + f64::from(hi)) / 2.0,
                _ => lo,
            })
        }
    }
}

/// Destructive size class on the half-step scale 1.0, 1.5, ..., 5.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DestructiveSize(u8);

impl DestructiveSize {
    pub const MIN: DestructiveSize = DestructiveSize(2);
    pub const MAX: DestructiveSize = DestructiveSize(10);

    pub fn from_value(value: f64) -> Result<Self, DomainError> {
        let halves = value * 2.0;
        if !halves.is_finite() || halves.fract() != 0.0 || !(2.0..=10.0).contains(&halves) {
            return Err(DomainError::InvalidSize(value));
        }
        Ok(DestructiveSize(halves as u8))
    }

    /// `half_steps` = 2 for size 1.0 up to 10 for size 5.0.
    pub fn from_half_steps(half_steps: u8) -> Result<Self, DomainError> {
        if (2..=10).contains(&half_steps) {
            Ok(DestructiveSize(half_steps))
        } else {
            Err(DomainError::InvalidSize(f64::from(half_steps) / 2.0))
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn half_steps(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = DestructiveSize> {
        (2..=10).map(DestructiveSize)
    }
}

impl fmt::Display for DestructiveSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

impl Serialize for DestructiveSize {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for DestructiveSize {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        DestructiveSize::from_value(value).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElevation")]
pub struct ElevationInterval {
    min_m: f64,
    max_m: f64,
}

#[derive(Deserialize)]
struct RawElevation {
    min_m: f64,
    max_m: f64,
}

impl TryFrom<RawElevation> for ElevationInterval {
    type Error = DomainError;

    fn try_from(raw: RawElevation) -> Result<Self, Self::Error> {
        ElevationInterval::new(raw.min_m, raw.max_m)
    }
}

impl ElevationInterval {
    pub fn new(min_m: f64, max_m: f64) -> Result<Self, DomainError> {
        for v in [min_m, max_m] {
            if !v.is_finite() || !(0.0..=MAX_ELEVATION_M).contains(&v) {
                return Err(DomainError::ElevationOutOfRange(v));
            }
        }
        if min_m > max_m {
            return Err(DomainError::ElevationInverted {
                min: min_m,
                max: max_m,
            });
        }
        Ok(Self { min_m, max_m })
    }

    pub fn min_m(&self) -> f64 {
        self.min_m
    }

    pub fn max_m(&self) -> f64 {
        self.max_m
    }

    /// Closed-interval intersection test.
    pub fn overlaps(&self, min_m: f64, max_m: f64) -> bool {
        self.min_m <= max_m && min_m <= self.max_m
    }
}

/// Clockwise sweep of compass directions from `start_deg` to `end_deg`,
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAspect")]
pub struct AspectInterval {
    start_deg: f64,
    end_deg: f64,
    full_circle: bool,
}

#[derive(Deserialize)]
struct RawAspect {
    start_deg: f64,
    end_deg: f64,
    #[serde(default)]
    full_circle: bool,
}

impl TryFrom<RawAspect> for AspectInterval {
    type Error = DomainError;

    fn try_from(raw: RawAspect) -> Result<Self, Self::Error> {
        AspectInterval::new(raw.start_deg, raw.end_deg, raw.full_circle)
    }
}

impl AspectInterval {
    pub fn new(start_deg: f64, end_deg: f64, full_circle: bool) -> Result<Self, DomainError> {
        for v in [start_deg, end_deg] {
            if !v.is_finite() || !(0.0..360.0).contains(&v) {
                return Err(DomainError::AspectOutOfRange(v));
            }
        }
        Ok(Self {
            start_deg,
            end_deg,
            full_circle,
        })
    }

    /// All aspects.
    pub fn full() -> Self {
        Self {
            start_deg: 0.0,
            end_deg: 0.0,
            full_circle: true,
        }
    }

    pub fn start_deg(&self) -> f64 {
        self.start_deg
    }

    pub fn end_deg(&self) -> f64 {
        self.end_deg
    }

    pub fn is_full_circle(&self) -> bool {
        self.full_circle
    }

    /// Clockwise length in degrees, in `[0, 360]`.
    pub fn angular_length(&self) -> f64 {
        if self.full_circle {
            360.0
        } else {
            clockwise_offset(self.start_deg, self.end_deg)
        }
    }
}

/// Clockwise distance from `from` to `to`, in `[0, 360)`.
fn clockwise_offset(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    // rem_euclid of a tiny negative value can round up to exactly 360
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// `true` iff `angle_deg` lies on the clockwise sweep of `interval`.
pub fn aspect_contains(interval: &AspectInterval, angle_deg: f64) -> bool {
    if interval.full_circle {
        return true;
    }
    clockwise_offset(interval.start_deg, angle_deg) <= interval.angular_length()
}

/// `true` iff some direction lies in both intervals.
///
/// Two closed arcs intersect exactly when one of them contains the other's
/// starting point.
pub fn aspect_overlaps(a: &AspectInterval, b: &AspectInterval) -> bool {
    a.full_circle
        || b.full_circle
        || aspect_contains(a, b.start_deg)
        || aspect_contains(b, a.start_deg)
}

/// One structured avalanche observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheObservationReport {
    pub report_id: String,
    pub operation_id: String,
    pub reported_at: DateTime<Utc>,
    pub occurred_on: NaiveDate,
    pub count: AvalancheCount,
    pub size: DestructiveSize,
    pub trigger: String,
    pub problem_type: String,
    pub elevation: ElevationInterval,
    pub aspect: AspectInterval,
    pub percent_observed: u8,
    pub comment: String,
}

/// Short alias used throughout the crate.
pub type Report = AvalancheObservationReport;

/// Operating area of an avalanche safety operation. `rings[0]` is the outer
/// boundary; vertices are `[lon, lat]` without a repeated closing vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationTenure {
    pub operation_id: String,
    pub display_name: String,
    pub rings: Vec<Vec<[f64; 2]>>,
}

impl OperationTenure {
    pub fn new(
        operation_id: impl Into<String>,
        display_name: impl Into<String>,
        rings: Vec<Vec<[f64; 2]>>,
    ) -> Result<Self, DomainError> {
        validate_rings(&rings)?;
        Ok(Self {
            operation_id: operation_id.into(),
            display_name: display_name.into(),
            rings,
        })
    }

    pub fn outer_ring(&self) -> &[[f64; 2]] {
        &self.rings[0]
    }
}

pub fn validate_rings(rings: &[Vec<[f64; 2]>]) -> Result<(), DomainError> {
    if rings.is_empty() {
        return Err(DomainError::EmptyPolygon);
    }
    for (i, ring) in rings.iter().enumerate() {
        if ring.len() < 3 {
            return Err(DomainError::RingTooShort {
                ring: i,
                vertices: ring.len(),
            });
        }
        if ring.iter().flatten().any(|c| !c.is_finite()) {
            return Err(DomainError::NonFiniteCoordinate);
        }
        if ring_self_intersects(ring) {
            return Err(DomainError::SelfIntersecting(i));
        }
    }
    Ok(())
}

fn ring_self_intersects(ring: &[[f64; 2]]) -> bool {
    let n = ring.len();
    let seg = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// One telemetry sample. Absent measurements are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherReading {
    pub station_id: String,
    pub timestamp: DateTime<Utc>,
    pub precip_mm: Option<f64>,
    pub wind_speed_kmh: Option<f64>,
    pub wind_dir_deg: Option<f64>,
    pub temp_c: Option<f64>,
}

impl WeatherReading {
    /// `true` if no measurement at all is present.
    pub fn is_empty(&self) -> bool {
        self.precip_mm.is_none()
            && self.wind_speed_kmh.is_none()
            && self.wind_dir_deg.is_none()
            && self.temp_c.is_none()
    }
}
