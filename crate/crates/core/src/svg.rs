//! Headless SVG rendering of the view models.
//!
//! Circle, segment and arc geometry is written exactly as it appears in the
//! view model; glyphs are placed with a `translate(..) scale(..)` transform
//! per group, one scale per view. Output is byte-deterministic.

use std::fmt::Write as _;

use crate::model::MAX_ELEVATION_M;
use crate::views::{GlyphLayout, ViewKind, ViewModels};

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 960.0,
            height: 480.0,
        }
    }
}

const MARGIN: f64 = 40.0;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

struct Doc {
    body: String,
    dimmed: bool,
}

impl Doc {
    fn new(views: &ViewModels, view: ViewKind) -> Self {
        Self {
            body: String::new(),
            dimmed: views.marks(view).iter().any(|(_, h)| *h),
        }
    }

    fn mark_class(&self, base: &str, highlighted: bool) -> String {
        match (highlighted, self.dimmed) {
            (true, _) => format!("{base} highlighted"),
            (false, true) => format!("{base} dimmed"),
            (false, false) => base.to_string(),
        }
    }

    fn glyph(&mut self, g: &GlyphLayout, x: f64, y: f64, scale: f64) {
        let _ = writeln!(
            self.body,
            r#"<g class="glyph" transform="translate({} {}) scale({})">"#,
            num(x),
            num(y),
            num(scale)
        );
        let _ = writeln!(
            self.body,
            r#"<circle class="enclosing" cx="{}" cy="{}" r="{}"/>"#,
            num(g.enclosing.cx),
            num(g.enclosing.cy),
            num(g.enclosing.r)
        );
        for m in &g.members {
            let class = self.mark_class("member", m.highlighted);
            let _ = writeln!(
                self.body,
                r#"<circle class="{class}" data-report-id="{}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                esc(&m.report_id),
                num(m.circle.cx),
                num(m.circle.cy),
                num(m.circle.r),
                m.color.hex
            );
        }
        self.body.push_str("</g>\n");
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, label: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            num(x),
            num(y),
            esc(label)
        );
    }

    fn finish(self, view: ViewKind, opts: &SvgOptions) -> String {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" class="view-{v}">"#,
            w = num(opts.width),
            h = num(opts.height),
            v = view.as_str()
        );
        out.push_str(STYLE);
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

const STYLE: &str = "<style>\
text{font:11px sans-serif;fill:#333}\
.axis,.grid{stroke:#999;fill:none}\
.enclosing{fill:none;stroke:#bbb;stroke-width:1;vector-effect:non-scaling-stroke}\
.member{stroke:#fff;stroke-width:0.5;vector-effect:non-scaling-stroke}\
.highlighted{stroke:#111;stroke-width:2}\
.dimmed{opacity:0.3}\
.tenure{stroke:#555;fill:#777}\
.segment,.arc{stroke:#3b6ea8;stroke-width:2;fill:none;stroke-linecap:round}\
.segment.highlighted,.arc.highlighted{stroke:#d9480f}\
</style>\n";

/// One scale for every glyph in a view so circle sizes stay comparable.
fn common_scale<'a>(glyphs: impl Iterator<Item = &'a GlyphLayout>, max_radius_px: f64) -> f64 {
    let largest = glyphs.map(|g| g.enclosing.r).fold(0.0, f64::max);
    if largest > 0.0 {
        (max_radius_px / largest).min(1.0)
    } else {
        1.0
    }
}

pub fn render_svg(views: &ViewModels, view: ViewKind, opts: &SvgOptions) -> String {
    let mut doc = Doc::new(views, view);
    match view {
        ViewKind::Timeline => timeline(&mut doc, views, opts),
        ViewKind::Matrix => matrix(&mut doc, views, opts),
        ViewKind::Map => map(&mut doc, views, opts),
        ViewKind::Elevation => elevation(&mut doc, views, opts),
        ViewKind::Aspect => aspect(&mut doc, views, opts),
    }
    doc.finish(view, opts)
}

fn timeline(doc: &mut Doc, views: &ViewModels, opts: &SvgOptions) {
    let base_y = opts.height - MARGIN;
    let _ = writeln!(
        doc.body,
        r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(MARGIN),
        num(base_y),
        num(opts.width - MARGIN),
        num(base_y)
    );
    let bins = &views.timeline.bins;
    if bins.is_empty() {
        return;
    }
    let bin_w = (opts.width - 2.0 * MARGIN) / bins.len() as f64;
    let avail = (bin_w / 2.0).min((base_y - MARGIN) / 2.0) - 4.0;
    let scale = common_scale(bins.iter().filter_map(|b| b.glyph.as_ref()), avail.max(1.0));
    let mid_y = (MARGIN + base_y) / 2.0;
    for (i, b) in bins.iter().enumerate() {
        let x = MARGIN + (i as f64 + 0.5) * bin_w;
        doc.text(x, base_y + 16.0, "middle", &b.date.to_string());
        if let Some(g) = &b.glyph {
            doc.glyph(g, x, mid_y, scale);
        }
    }
}

fn matrix(doc: &mut Doc, views: &ViewModels, opts: &SvgOptions) {
    let m = &views.matrix;
    let left = MARGIN + 110.0;
    let top = MARGIN + 20.0;
    let cols = m.columns.len().max(1) as f64;
    let rows = m.rows.len().max(1) as f64;
    let cw = (opts.width - left - MARGIN) / cols;
    let ch = (opts.height - top - MARGIN) / rows;
    for (c, name) in m.columns.iter().enumerate() {
        doc.text(left + (c as f64 + 0.5) * cw, top - 6.0, "middle", name);
    }
    for (r, name) in m.rows.iter().enumerate() {
        doc.text(left - 6.0, top + (r as f64 + 0.5) * ch + 4.0, "end", name);
    }
    for r in 0..=m.rows.len() {
        let y = top + r as f64 * ch;
        let _ = writeln!(
            doc.body,
            r#"<line class="grid" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(left),
            num(y),
            num(left + cols * cw),
            num(y)
        );
    }
    for c in 0..=m.columns.len() {
        let x = left + c as f64 * cw;
        let _ = writeln!(
            doc.body,
            r#"<line class="grid" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(x),
            num(top),
            num(x),
            num(top + rows * ch)
        );
    }
    let scale = common_scale(m.cells.iter().map(|c| &c.glyph), (cw.min(ch) / 2.0 - 2.0).max(1.0));
    for cell in &m.cells {
        let x = left + (cell.column as f64 + 0.5) * cw;
        let y = top + (cell.row as f64 + 0.5) * ch;
        doc.glyph(&cell.glyph, x, y, scale);
    }
}

fn map(doc: &mut Doc, views: &ViewModels, opts: &SvgOptions) {
    let ops = &views.map.operations;
    let pts = ops.iter().flat_map(|o| o.rings.iter().flatten());
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    if min_x > max_x {
        return;
    }
    // equirectangular, longitude shrunk by the mean latitude
    let kx = ((min_y + max_y) / 2.0).to_radians().cos().max(0.05);
    let span_x = ((max_x - min_x) * kx).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let s = ((opts.width - 2.0 * MARGIN) / span_x).min((opts.height - 2.0 * MARGIN) / span_y);
    let project = |p: [f64; 2]| (MARGIN + (p[0] - min_x) * kx * s, opts.height - MARGIN - (p[1] - min_y) * s);
    for o in ops {
        let mut d = String::new();
        for ring in &o.rings {
            for (i, p) in ring.iter().enumerate() {
                let (x, y) = project(*p);
                let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, num(x), num(y));
            }
            d.push_str("Z ");
        }
        let opacity = o.shading.unwrap_or(0.0);
        let _ = writeln!(
            doc.body,
            r#"<path class="tenure" data-operation-id="{}" fill-opacity="{}" fill-rule="evenodd" d="{}"/>"#,
            esc(&o.operation_id),
            num(opacity),
            d.trim_end()
        );
    }
    let scale = common_scale(ops.iter().filter_map(|o| o.glyph.as_ref()), 40.0);
    for o in ops {
        let (x, y) = project(o.centroid);
        if let Some(g) = &o.glyph {
            doc.glyph(g, x, y, scale);
        }
        doc.text(x, y + 52.0, "middle", &o.display_name);
    }
}

fn elevation(doc: &mut Doc, views: &ViewModels, opts: &SvgOptions) {
    let segs = &views.elevation.segments;
    let top_m = segs
        .iter()
        .map(|s| s.max_m)
        .fold(0.0, f64::max)
        .clamp(1000.0, MAX_ELEVATION_M);
    let top_m = (top_m / 500.0).ceil() * 500.0;
    let plot_h = opts.height - 2.0 * MARGIN;
    let y_of = |m: f64| opts.height - MARGIN - m / top_m * plot_h;
    let _ = writeln!(
        doc.body,
        r#"<line class="axis" x1="{m}" y1="{}" x2="{m}" y2="{}"/>"#,
        num(y_of(0.0)),
        num(y_of(top_m)),
        m = num(MARGIN)
    );
    let mut tick = 0.0;
    while tick <= top_m {
        doc.text(MARGIN - 4.0, y_of(tick) + 4.0, "end", &format!("{tick:.0}"));
        tick += 500.0;
    }
    let step = (opts.width - 2.0 * MARGIN) / (segs.len() as f64 + 1.0);
    for s in segs {
        let x = MARGIN + (s.index as f64 + 1.0) * step;
        let class = doc.mark_class("segment", s.highlighted);
        let _ = writeln!(
            doc.body,
            r#"<line class="{class}" data-report-id="{}" x1="{x}" y1="{}" x2="{x}" y2="{}"/>"#,
            esc(&s.report_id),
            num(y_of(s.min_m)),
            num(y_of(s.max_m)),
            x = num(x)
        );
    }
}

fn aspect(doc: &mut Doc, views: &ViewModels, opts: &SvgOptions) {
    let arcs = &views.aspect.arcs;
    let (cx, cy) = (opts.width / 2.0, opts.height / 2.0);
    let outer = (opts.width.min(opts.height) / 2.0 - MARGIN).max(10.0);
    let inner = outer * 0.15;
    let step = if arcs.is_empty() {
        0.0
    } else {
        (outer - inner) / arcs.len() as f64
    };
    let _ = writeln!(
        doc.body,
        r#"<circle class="axis" cx="{}" cy="{}" r="{}"/>"#,
        num(cx),
        num(cy),
        num(outer)
    );
    for (label, deg) in [("N", 0.0f64), ("E", 90.0), ("S", 180.0), ("W", 270.0)] {
        let r = outer + 14.0;
        let (x, y) = (cx + r * deg.to_radians().sin(), cy - r * deg.to_radians().cos());
        doc.text(x, y + 4.0, "middle", label);
    }
    // compass bearings run clockwise from north; SVG y grows downwards
    let at = |r: f64, deg: f64| (cx + r * deg.to_radians().sin(), cy - r * deg.to_radians().cos());
    for a in arcs {
        let r = inner + (a.index as f64 + 0.5) * step;
        let class = doc.mark_class("arc", a.highlighted);
        let id = esc(&a.report_id);
        if a.sweep_deg >= 360.0 {
            let _ = writeln!(
                doc.body,
                r#"<circle class="{class}" data-report-id="{id}" cx="{}" cy="{}" r="{}"/>"#,
                num(cx),
                num(cy),
                num(r)
            );
        } else if a.sweep_deg == 0.0 {
            let (x, y) = at(r, a.start_deg);
            let _ = writeln!(
                doc.body,
                r#"<path class="{class}" data-report-id="{id}" d="M{} {} L{} {}"/>"#,
                num(x),
                num(y),
                num(x),
                num(y)
            );
        } else {
            let (x0, y0) = at(r, a.start_deg);
            let (x1, y1) = at(r, a.start_deg + a.sweep_deg);
            let large = u8::from(a.sweep_deg > 180.0);
            let _ = writeln!(
                doc.body,
                r#"<path class="{class}" data-report-id="{id}" d="M{} {} A{r} {r} 0 {large} 1 {} {}"/>"#,
                num(x0),
                num(y0),
                num(x1),
                num(y1),
                r = num(r)
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::selection::{annotate_highlights, SelectionAction, SelectionState};
    use crate::synth::{generate_synthetic, SynthConfig};

    fn views() -> (ViewModels, Vec<crate::model::Report>) {
        let d = generate_synthetic(&SynthConfig::default(), &Config::default()).unwrap();
        let v = ViewModels::build(&d.reports, &d.tenures, None, &Config::default()).unwrap();
        (v, d.reports)
    }

    #[test]
    fn empty_timeline_has_axis_only() {
        let v = ViewModels::build(&[], &[], None, &Config::default()).unwrap();
        let svg = render_svg(&v, ViewKind::Timeline, &SvgOptions::default());
        assert!(svg.contains(r#"class="axis""#));
        assert!(!svg.contains(r#"class="member"#));
    }

    #[test]
    fn member_count_matches_reports() {
        let (v, reports) = views();
        for view in [ViewKind::Timeline, ViewKind::Matrix, ViewKind::Map] {
            let svg = render_svg(&v, view, &SvgOptions::default());
            assert_eq!(svg.matches(r#"<circle class="member"#).count(), reports.len(), "{view:?}");
        }
        let svg = render_svg(&v, ViewKind::Elevation, &SvgOptions::default());
        assert_eq!(svg.matches(r#"class="segment"#).count(), reports.len());
        let svg = render_svg(&v, ViewKind::Aspect, &SvgOptions::default());
        assert_eq!(svg.matches(r#"<path class="arc"#).count() + svg.matches(r#"<circle class="arc"#).count(), reports.len());
    }

    #[test]
    fn deterministic() {
        let (v, _) = views();
        for view in ViewKind::ALL {
            let o = SvgOptions::default();
            assert_eq!(render_svg(&v, view, &o), render_svg(&v, view, &o));
        }
    }

    #[test]
    fn highlights_render() {
        let (v, reports) = views();
        let s = SelectionState::default()
            .apply(&SelectionAction::Set { ids: vec![reports[0].report_id.clone()] }, &reports)
            .state;
        let hv = annotate_highlights(&v, &s);
        let svg = render_svg(&hv, ViewKind::Matrix, &SvgOptions::default());
        assert_eq!(svg.matches("member highlighted").count(), 1);
        assert_eq!(svg.matches("member dimmed").count(), reports.len() - 1);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.0001), "0");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(1.23456), "1.235");
        assert_eq!(esc("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
