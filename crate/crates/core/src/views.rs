//! Render-ready view models for the five coordinated views.
//!
//! Each report becomes one circle in a packed glyph: area follows the size
//! class, hue follows whether the count was numeric or ordinal, and darkness
//! follows the resolved count on a log scale. Glyphs are grouped by day
//! (timeline), by problem type and trigger (matrix) and by operation (map).
//! The elevation chart and aspect arc diagram draw one segment or arc per
//! report.
//!
//! Builders sort their input canonically, so the order in which reports are
//! supplied never affects the output.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, Theme};
use crate::geometry::{interval_to_arc, pack_circles, polygon_centroid, Circle, GeometryError};
use crate::model::{
    resolve_count_scalar, AvalancheCount, CountVariant, DestructiveSize, DomainError,
    OperationTenure, Report,
};

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Circle area proportional to the size class: `base * sqrt(size)`.
pub fn size_to_radius(size: DestructiveSize, base: f64) -> f64 {
    base * size.value().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorFamily {
    #[serde(rename = "numeric-blue")]
    NumericBlue,
    #[serde(rename = "ordinal-green")]
    OrdinalGreen,
}

impl ColorFamily {
    pub fn for_variant(variant: CountVariant) -> Self {
        match variant {
            CountVariant::Numeric => ColorFamily::NumericBlue,
            CountVariant::Ordinal => ColorFamily::OrdinalGreen,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorFamily::NumericBlue => "numeric-blue",
            ColorFamily::OrdinalGreen => "ordinal-green",
        }
    }
}

/// Colour of one glyph member. `lightness` and `hex` are derived from
/// `family` and `darkness` through the theme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSpec {
    pub family: ColorFamily,
    pub darkness: f64,
    pub lightness: f64,
    pub hex: String,
}

impl ColorSpec {
    pub fn new(family: ColorFamily, darkness: f64, theme: &Theme) -> Self {
        let lightness = theme.lightness_light - theme.lightness_span * darkness;
        let hue = match family {
            ColorFamily::NumericBlue => theme.numeric_hue,
            ColorFamily::OrdinalGreen => theme.ordinal_hue,
        };
        Self {
            family,
            darkness,
            lightness,
            hex: lch_to_hex(lightness, theme.chroma, hue),
        }
    }
}

/// `log(1 + min(s, cap)) / log(1 + cap)` on the resolved count `s`.
pub fn darkness_for_scalar(scalar: f64, cap: u32) -> f64 {
    let cap = f64::from(cap.max(1));
    (1.0 + scalar.clamp(0.0, cap)).ln() / (1.0 + cap).ln()
}

pub fn count_to_color(count: &AvalancheCount, config: &Config) -> Result<ColorSpec, DomainError> {
    let scalar = resolve_count_scalar(count, &config.bins, config.scalar_policy)?;
    Ok(ColorSpec::new(
        ColorFamily::for_variant(count.variant()),
        darkness_for_scalar(scalar, config.darkness_cap),
        &config.theme,
    ))
}

/// CIE LCh(ab) under D65 to an sRGB hex string, clamped to gamut.
pub fn lch_to_hex(lightness: f64, chroma: f64, hue_deg: f64) -> String {
    let h = hue_deg.to_radians();
    let (a, b) = (chroma * h.cos(), chroma * h.sin());
    let fy = (lightness + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let delta = 6.0 / 29.0;
    let finv = |t: f64| {
        if t > delta {
            t * t * t
        } else {
            3.0 * delta * delta * (t - 4.0 / 29.0)
        }
    };
    let (x, y, z) = (0.95047 * finv(fx), finv(fy), 1.08883 * finv(fz));
    let lin = [
        3.2404542 * x - 1.5371385 * y - 0.4985314 * z,
        -0.9692660 * x + 1.8760108 * y + 0.0415560 * z,
        0.0556434 * x - 0.2040259 * y + 1.0572252 * z,
    ];
    let channel = |c: f64| {
        let c = c.clamp(0.0, 1.0);
        let g = if c <= 0.0031308 {
            12.92 * c
        } else {
            1.055 * c.powf(1.0 / 2.4) - 0.055
        };
        (g * 255.0).round() as u8
    };
    format!("#{:02x}{:02x}{:02x}", channel(lin[0]), channel(lin[1]), channel(lin[2]))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKey {
    Date { date: NaiveDate },
    Cell { problem_type: String, trigger: String },
    Operation { operation_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphMember {
    pub report_id: String,
    pub circle: Circle,
    pub color: ColorSpec,
    pub highlighted: bool,
}

/// Packed glyph for one group. The enclosing circle is centred on the
/// origin; members are in canonical order (larger first, then report id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphLayout {
    pub key: GroupKey,
    pub enclosing: Circle,
    pub members: Vec<GlyphMember>,
}

/// Descending size, ties by ascending report id.
fn canonical_glyph_order(a: &Report, b: &Report) -> std::cmp::Ordering {
    b.size.cmp(&a.size).then_with(|| a.report_id.cmp(&b.report_id))
}

/// Occurrence day, then report id.
fn canonical_chart_order(a: &Report, b: &Report) -> std::cmp::Ordering {
    a.occurred_on
        .cmp(&b.occurred_on)
        .then_with(|| a.report_id.cmp(&b.report_id))
}

/// # Panics
///
/// If `reports` is empty.
pub fn build_glyph(reports: &[&Report], key: GroupKey, config: &Config) -> Result<GlyphLayout, ViewError> {
    assert!(!reports.is_empty(), "a glyph needs at least one report");
    let mut ordered = reports.to_vec();
    ordered.sort_by(|a, b| canonical_glyph_order(a, b));
    let radii: Vec<f64> = ordered
        .iter()
        .map(|r| size_to_radius(r.size, config.radius_base))
        .collect();
    let packed = pack_circles(&radii);
    let members = ordered
        .iter()
        .zip(packed.members)
        .map(|(r, circle)| {
            Ok(GlyphMember {
                report_id: r.report_id.clone(),
                circle,
                color: count_to_color(&r.count, config)?,
                highlighted: false,
            })
        })
        .collect::<Result<Vec<_>, DomainError>>()?;
    Ok(GlyphLayout {
        key,
        enclosing: packed.enclosing,
        members,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayBin {
    pub date: NaiveDate,
    pub glyph: Option<GlyphLayout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineViewModel {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub bins: Vec<DayBin>,
    /// Reports outside `from..=to`.
    pub clipped: usize,
}

/// One bin per day of `range` (inclusive); glyphs only where reports exist.
/// Without a range the span of the reports' occurrence days is used.
pub fn build_timeline(
    reports: &[Report],
    range: Option<(NaiveDate, NaiveDate)>,
    config: &Config,
) -> Result<TimelineViewModel, ViewError> {
    let range = range.or_else(|| {
        let min = reports.iter().map(|r| r.occurred_on).min()?;
        let max = reports.iter().map(|r| r.occurred_on).max()?;
        Some((min, max))
    });
    let Some((from, to)) = range else {
        return Ok(TimelineViewModel {
            from: None,
            to: None,
            bins: Vec::new(),
            clipped: 0,
        });
    };
    let mut by_day: BTreeMap<NaiveDate, Vec<&Report>> = BTreeMap::new();
    let mut clipped = 0;
    for r in reports {
        if r.occurred_on < from || r.occurred_on > to {
            clipped += 1;
        } else {
            by_day.entry(r.occurred_on).or_default().push(r);
        }
    }
    let mut bins = Vec::new();
    for date in from.iter_days().take_while(|d| *d <= to) {
        let glyph = match by_day.get(&date) {
            Some(day) => Some(build_glyph(day, GroupKey::Date { date }, config)?),
            None => None,
        };
        bins.push(DayBin { date, glyph });
    }
    Ok(TimelineViewModel {
        from: Some(from),
        to: Some(to),
        bins,
        clipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub row: usize,
    pub column: usize,
    pub problem_type: String,
    pub trigger: String,
    pub glyph: GlyphLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixViewModel {
    /// Problem types, in vocabulary order.
    pub rows: Vec<String>,
    /// Triggers, in vocabulary order.
    pub columns: Vec<String>,
    /// Non-empty cells, row-major.
    pub cells: Vec<MatrixCell>,
}

/// Vocabulary order, then any stray tokens in sorted order.
fn axis(vocab: &[String], seen: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = vocab.to_vec();
    let extra: BTreeSet<String> = seen.filter(|t| !vocab.contains(t)).collect();
    out.extend(extra);
    out
}

pub fn build_matrix(reports: &[Report], config: &Config) -> Result<MatrixViewModel, ViewError> {
    let rows = axis(
        &config.vocabulary.problem_types,
        reports.iter().map(|r| r.problem_type.clone()),
    );
    let columns = axis(
        &config.vocabulary.triggers,
        reports.iter().map(|r| r.trigger.clone()),
    );
    let mut grouped: BTreeMap<(usize, usize), Vec<&Report>> = BTreeMap::new();
    for r in reports {
        let row = rows.iter().position(|p| *p == r.problem_type).expect("axis covers tokens");
        let col = columns.iter().position(|t| *t == r.trigger).expect("axis covers tokens");
        grouped.entry((row, col)).or_default().push(r);
    }
    let cells = grouped
        .into_iter()
        .map(|((row, column), members)| {
            let key = GroupKey::Cell {
                problem_type: rows[row].clone(),
                trigger: columns[column].clone(),
            };
            Ok(MatrixCell {
                row,
                column,
                problem_type: rows[row].clone(),
                trigger: columns[column].clone(),
                glyph: build_glyph(&members, key, config)?,
            })
        })
        .collect::<Result<_, ViewError>>()?;
    Ok(MatrixViewModel { rows, columns, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapOperation {
    pub operation_id: String,
    pub display_name: String,
    pub rings: Vec<Vec<[f64; 2]>>,
    /// Glyph anchor, `[lon, lat]`.
    pub centroid: [f64; 2],
    /// Mean share of the tenure observed, in `[0, 1]`; absent without reports.
    pub shading: Option<f64>,
    pub glyph: Option<GlyphLayout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapViewModel {
    /// Ordered by operation id.
    pub operations: Vec<MapOperation>,
    /// Reports whose operation has no tenure, by report id.
    pub unmapped: Vec<String>,
}

pub fn build_map(
    reports: &[Report],
    tenures: &[OperationTenure],
    config: &Config,
) -> Result<MapViewModel, ViewError> {
    let mut by_op: BTreeMap<&str, Vec<&Report>> = BTreeMap::new();
    for r in reports {
        by_op.entry(r.operation_id.as_str()).or_default().push(r);
    }
    let mut sorted: Vec<&OperationTenure> = tenures.iter().collect();
    sorted.sort_by(|a, b| a.operation_id.cmp(&b.operation_id));
    let mut operations = Vec::with_capacity(sorted.len());
    for t in sorted {
        let centroid = polygon_centroid(t)?;
        let members = by_op.remove(t.operation_id.as_str());
        let (shading, glyph) = match members {
            Some(m) => {
                let mean = m.iter().map(|r| f64::from(r.percent_observed)).sum::<f64>() / m.len() as f64;
                let key = GroupKey::Operation {
                    operation_id: t.operation_id.clone(),
                };
                (Some(mean / 100.0), Some(build_glyph(&m, key, config)?))
            }
            None => (None, None),
        };
        operations.push(MapOperation {
            operation_id: t.operation_id.clone(),
            display_name: t.display_name.clone(),
            rings: t.rings.clone(),
            centroid,
            shading,
            glyph,
        });
    }
    let mut unmapped: Vec<String> = by_op
        .into_values()
        .flatten()
        .map(|r| r.report_id.clone())
        .collect();
    unmapped.sort();
    Ok(MapViewModel { operations, unmapped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElevationSegment {
    pub index: usize,
    pub report_id: String,
    pub min_m: f64,
    pub max_m: f64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElevationChartViewModel {
    pub segments: Vec<ElevationSegment>,
}

pub fn build_elevation_chart(reports: &[Report]) -> ElevationChartViewModel {
    let mut ordered: Vec<&Report> = reports.iter().collect();
    ordered.sort_by(|a, b| canonical_chart_order(a, b));
    let segments = ordered
        .into_iter()
        .enumerate()
        .map(|(index, r)| ElevationSegment {
            index,
            report_id: r.report_id.clone(),
            min_m: r.elevation.min_m(),
            max_m: r.elevation.max_m(),
            highlighted: false,
        })
        .collect();
    ElevationChartViewModel { segments }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectArc {
    pub index: usize,
    pub report_id: String,
    pub start_deg: f64,
    pub sweep_deg: f64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectArcViewModel {
    pub arcs: Vec<AspectArc>,
}

pub fn build_aspect_arcs(reports: &[Report]) -> AspectArcViewModel {
    let mut ordered: Vec<&Report> = reports.iter().collect();
    ordered.sort_by(|a, b| canonical_chart_order(a, b));
    let arcs = ordered
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let arc = interval_to_arc(&r.aspect);
            AspectArc {
                index,
                report_id: r.report_id.clone(),
                start_deg: arc.start_deg,
                sweep_deg: arc.sweep_deg,
                highlighted: false,
            }
        })
        .collect();
    AspectArcViewModel { arcs }
}

/// Which of the five views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Timeline,
    Matrix,
    Map,
    Elevation,
    Aspect,
}

impl ViewKind {
    pub const ALL: [ViewKind; 5] = [
        ViewKind::Timeline,
        ViewKind::Matrix,
        ViewKind::Map,
        ViewKind::Elevation,
        ViewKind::Aspect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Timeline => "timeline",
            ViewKind::Matrix => "matrix",
            ViewKind::Map => "map",
            ViewKind::Elevation => "elevation",
            ViewKind::Aspect => "aspect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown view {0:?}; expected timeline, matrix, map, elevation or aspect")]
pub struct UnknownView(pub String);

impl std::str::FromStr for ViewKind {
    type Err = UnknownView;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewKind::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| UnknownView(s.to_string()))
    }
}

/// All five views over the same report scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewModels {
    pub timeline: TimelineViewModel,
    pub matrix: MatrixViewModel,
    pub map: MapViewModel,
    pub elevation: ElevationChartViewModel,
    pub aspect: AspectArcViewModel,
}

impl ViewModels {
    /// Builds every view over the reports that fall inside `range`.
    pub fn build(
        reports: &[Report],
        tenures: &[OperationTenure],
        range: Option<(NaiveDate, NaiveDate)>,
        config: &Config,
    ) -> Result<Self, ViewError> {
        let timeline = build_timeline(reports, range, config)?;
        let scoped: Vec<Report> = match (timeline.from, timeline.to) {
            (Some(from), Some(to)) => reports
                .iter()
                .filter(|r| r.occurred_on >= from && r.occurred_on <= to)
                .cloned()
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            timeline,
            matrix: build_matrix(&scoped, config)?,
            map: build_map(&scoped, tenures, config)?,
            elevation: build_elevation_chart(&scoped),
            aspect: build_aspect_arcs(&scoped),
        })
    }

    /// `(report_id, highlighted)` for every mark in `view`, in render order.
    /// Map marks exclude unmapped reports.
    pub fn marks(&self, view: ViewKind) -> Vec<(&str, bool)> {
        fn glyph_marks(g: &GlyphLayout) -> impl Iterator<Item = (&str, bool)> {
            g.members.iter().map(|m| (m.report_id.as_str(), m.highlighted))
        }
        match view {
            ViewKind::Timeline => self
                .timeline
                .bins
                .iter()
                .filter_map(|b| b.glyph.as_ref())
                .flat_map(glyph_marks)
                .collect(),
            ViewKind::Matrix => self.matrix.cells.iter().flat_map(|c| glyph_marks(&c.glyph)).collect(),
            ViewKind::Map => self
                .map
                .operations
                .iter()
                .filter_map(|o| o.glyph.as_ref())
                .flat_map(glyph_marks)
                .collect(),
            ViewKind::Elevation => self
                .elevation
                .segments
                .iter()
                .map(|s| (s.report_id.as_str(), s.highlighted))
                .collect(),
            ViewKind::Aspect => self
                .aspect
                .arcs
                .iter()
                .map(|a| (a.report_id.as_str(), a.highlighted))
                .collect(),
        }
    }

    /// Report ids flagged as highlighted in `view`.
    pub fn highlighted_ids(&self, view: ViewKind) -> BTreeSet<String> {
        self.marks(view)
            .into_iter()
            .filter(|(_, h)| *h)
            .map(|(id, _)| id.to_string())
            .collect()
    }

    pub(crate) fn for_each_flag(&mut self, mut f: impl FnMut(&str, &mut bool)) {
        let mut glyph = |g: &mut GlyphLayout| {
            for m in &mut g.members {
                f(&m.report_id, &mut m.highlighted);
            }
        };
        for b in &mut self.timeline.bins {
            if let Some(g) = b.glyph.as_mut() {
                glyph(g);
            }
        }
        for c in &mut self.matrix.cells {
            glyph(&mut c.glyph);
        }
        for o in &mut self.map.operations {
            if let Some(g) = o.glyph.as_mut() {
                glyph(g);
            }
        }
        for s in &mut self.elevation.segments {
            f(&s.report_id, &mut s.highlighted);
        }
        for a in &mut self.aspect.arcs {
            f(&a.report_id, &mut a.highlighted);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AspectInterval, ElevationInterval, OrdinalBin};
    use chrono::{TimeZone, Utc};

    pub(crate) fn report(id: &str, day: u32, size: f64) -> Report {
        Report {
            report_id: id.to_string(),
            operation_id: "op-a".into(),
            reported_at: Utc.with_ymd_and_hms(2020, 1, day, 18, 0, 0).unwrap(),
            occurred_on: NaiveDate::from_ymd_opt(2020, 1, day).unwrap(),
            count: AvalancheCount::numeric(1),
            size: DestructiveSize::from_value(size).unwrap(),
            trigger: "natural".into(),
            problem_type: "storm-slab".into(),
            elevation: ElevationInterval::new(1800.0, 2400.0).unwrap(),
            aspect: AspectInterval::new(315.0, 45.0, false).unwrap(),
            percent_observed: 50,
            comment: String::new(),
        }
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, day).unwrap()
    }

    #[test]
    fn radius_encoding() {
        let s = |v| DestructiveSize::from_value(v).unwrap();
        assert_eq!(size_to_radius(s(1.0), 8.0), 8.0);
        assert_eq!(size_to_radius(s(4.0), 8.0), 16.0);
        assert!(size_to_radius(s(2.5), 0.3) < size_to_radius(s(3.0), 0.3));
    }

    #[test]
    fn color_endpoints() {
        let cfg = Config::default();
        let c0 = count_to_color(&AvalancheCount::numeric(0), &cfg).unwrap();
        assert_eq!((c0.family, c0.darkness), (ColorFamily::NumericBlue, 0.0));
        assert_eq!(c0.lightness, 90.0);
        let c100 = count_to_color(&AvalancheCount::numeric(100), &cfg).unwrap();
        assert_eq!(c100.darkness, 1.0);
        assert_eq!(c100.lightness, 30.0);
        let c_big = count_to_color(&AvalancheCount::numeric(5000), &cfg).unwrap();
        assert_eq!(c_big.darkness, 1.0);
    }

    #[test]
    fn color_several() {
        let cfg = Config::default();
        let several = AvalancheCount::Ordinal(OrdinalBin::new("several", 2, Some(9)).unwrap());
        let c = count_to_color(&several, &cfg).unwrap();
        assert_eq!(c.family, ColorFamily::OrdinalGreen);
        // log(6.5) / log(101)
        assert!((c.darkness - 0.405_580_3).abs() < 1e-6, "{}", c.darkness);
    }

    #[test]
    fn color_unknown_label_propagates() {
        let cfg = Config::default();
        let odd = AvalancheCount::Ordinal(OrdinalBin::new("gazillions", 5, None).unwrap());
        assert!(matches!(count_to_color(&odd, &cfg), Err(DomainError::UnknownBinLabel(_))));
    }

    #[test]
    fn hex_ramp_gets_darker() {
        let theme = Theme::default();
        let luminance = |hex: &str| {
            let v = u32::from_str_radix(&hex[1..], 16).unwrap();
            ((v >> 16) & 0xff) + ((v >> 8) & 0xff) + (v & 0xff)
        };
        for family in [ColorFamily::NumericBlue, ColorFamily::OrdinalGreen] {
            let light = ColorSpec::new(family, 0.0, &theme);
            let dark = ColorSpec::new(family, 1.0, &theme);
            assert!(luminance(&light.hex) > luminance(&dark.hex));
        }
        assert_eq!(lch_to_hex(100.0, 0.0, 0.0), "#ffffff");
        assert_eq!(lch_to_hex(0.0, 0.0, 0.0), "#000000");
    }

    #[test]
    fn glyph_singleton_and_pair() {
        let cfg = Config::default();
        let a = report("a", 14, 2.0);
        let g = build_glyph(&[&a], GroupKey::Date { date: d(14) }, &cfg).unwrap();
        assert_eq!(g.members.len(), 1);
        assert_eq!(g.members[0].circle, Circle::new(0.0, 0.0, 8.0 * 2f64.sqrt()));
        assert_eq!(g.enclosing, g.members[0].circle);

        let b = report("b", 14, 2.0);
        let g = build_glyph(&[&b, &a], GroupKey::Date { date: d(14) }, &cfg).unwrap();
        let r = g.members[0].circle.r;
        assert!((g.enclosing.r - 2.0 * r).abs() < 1e-12);
        assert_eq!(g.members[0].report_id, "a");
    }

    #[test]
    fn glyph_order_is_canonical() {
        let cfg = Config::default();
        let reps = [report("c", 14, 1.0), report("b", 14, 3.0), report("a", 14, 1.0)];
        let g = build_glyph(&reps.iter().collect::<Vec<_>>(), GroupKey::Date { date: d(14) }, &cfg).unwrap();
        let ids: Vec<&str> = g.members.iter().map(|m| m.report_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
    }

    #[test]
    fn timeline_bins() {
        let cfg = Config::default();
        let reps = vec![report("a", 14, 1.0), report("b", 15, 1.0), report("c", 16, 1.0)];
        let t = build_timeline(&reps, Some((d(14), d(16))), &cfg).unwrap();
        assert_eq!(t.bins.len(), 3);
        assert!(t.bins.iter().all(|b| b.glyph.as_ref().unwrap().members.len() == 1));

        let t = build_timeline(&[], Some((d(14), d(16))), &cfg).unwrap();
        assert_eq!(t.bins.len(), 3);
        assert!(t.bins.iter().all(|b| b.glyph.is_none()));

        let reps = vec![report("a", 14, 1.0), report("b", 14, 1.0), report("z", 20, 1.0)];
        let t = build_timeline(&reps, Some((d(13), d(15))), &cfg).unwrap();
        assert_eq!(t.clipped, 1);
        assert!(t.bins[0].glyph.is_none());
        assert_eq!(t.bins[1].glyph.as_ref().unwrap().members.len(), 2);
    }

    #[test]
    fn matrix_cells() {
        let cfg = Config::default();
        let mut a = report("a", 14, 1.0);
        let mut b = report("b", 14, 1.0);
        b.trigger = "explosive".into();
        a.trigger = "natural".into();
        let mut c = report("c", 14, 1.0);
        c.trigger = crate::model::UNSPECIFIED.into();
        let m = build_matrix(&[a, b, c], &cfg).unwrap();
        assert_eq!(m.cells.len(), 3);
        assert!(m.cells.iter().all(|c| c.problem_type == "storm-slab" && c.row == 0));
        let unspecified_col = m.columns.iter().position(|t| t == "unspecified").unwrap();
        assert!(m.cells.iter().any(|c| c.column == unspecified_col));
        let total: usize = m.cells.iter().map(|c| c.glyph.members.len()).sum();
        assert_eq!(total, 3);
    }

    fn square(id: &str, x: f64) -> OperationTenure {
        OperationTenure::new(id, id, vec![vec![[x, 0.0], [x + 1.0, 0.0], [x + 1.0, 1.0], [x, 1.0]]]).unwrap()
    }

    #[test]
    fn map_shading_and_empty_ops() {
        let cfg = Config::default();
        let mut a = report("a", 14, 1.0);
        a.percent_observed = 40;
        let mut b = report("b", 14, 1.0);
        b.percent_observed = 60;
        let mut c = report("c", 14, 1.0);
        c.operation_id = "op-b".into();
        let mut lost = report("lost", 14, 1.0);
        lost.operation_id = "op-zzz".into();
        let m = build_map(&[a, b, c, lost], &[square("op-c", 4.0), square("op-a", 0.0), square("op-b", 2.0)], &cfg)
            .unwrap();
        let ids: Vec<&str> = m.operations.iter().map(|o| o.operation_id.as_str()).collect();
        assert_eq!(ids, ["op-a", "op-b", "op-c"]);
        assert_eq!(m.operations[0].shading, Some(0.5));
        assert_eq!(m.operations[0].centroid, [0.5, 0.5]);
        assert_eq!(m.operations[0].glyph.as_ref().unwrap().members.len(), 2);
        assert_eq!(m.operations[1].glyph.as_ref().unwrap().members.len(), 1);
        assert_eq!(m.operations[2].shading, None);
        assert!(m.operations[2].glyph.is_none());
        assert_eq!(m.unmapped, ["lost"]);
    }

    #[test]
    fn charts() {
        let mut a = report("a", 15, 1.0);
        a.aspect = AspectInterval::new(315.0, 45.0, false).unwrap();
        let b = report("b", 14, 1.0);
        let e = build_elevation_chart(&[a.clone(), b.clone()]);
        assert_eq!(e.segments[0].report_id, "b");
        assert_eq!((e.segments[1].min_m, e.segments[1].max_m), (1800.0, 2400.0));
        assert_eq!(e.segments.iter().map(|s| s.index).collect::<Vec<_>>(), [0, 1]);
        let arcs = build_aspect_arcs(&[a, b]);
        assert_eq!((arcs.arcs[1].start_deg, arcs.arcs[1].sweep_deg), (315.0, 90.0));
    }

    #[test]
    fn view_kind_parse() {
        assert_eq!("map".parse::<ViewKind>(), Ok(ViewKind::Map));
        assert!("globe".parse::<ViewKind>().is_err());
    }
}
