//! Deterministic layout geometry: polygon centroids, front-chain sibling
//! circle packing, smallest enclosing circle of circles, and aspect arcs.
//!
//! Every function here is pure. Identical inputs give bit-identical outputs;
//! nothing is randomised.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AspectInterval, OperationTenure};

/// Relative slack used when testing whether two packed circles overlap.
pub const PACK_TOLERANCE: f64 = 1e-6;

/// Relative slack used when testing whether a circle encloses another.
pub const ENCLOSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("ring has no vertices")]
    DegenerateGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub const ZERO: Circle = Circle {
        cx: 0.0,
        cy: 0.0,
        r: 0.0,
    };

    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn distance_to(&self, other: &Circle) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }

    /// `true` if `other` lies inside `self`, allowing `slack` layout units.
    pub fn contains_circle(&self, other: &Circle, slack: f64) -> bool {
        self.distance_to(other) + other.r <= self.r + slack
    }

    fn translated(&self, dx: f64, dy: f64) -> Circle {
        Circle::new(self.cx + dx, self.cy + dy, self.r)
    }
}

/// Packed member circles, index-aligned with the input radii, plus the
/// smallest circle enclosing them. After packing the enclosing circle is
/// centred on the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedLayout {
    pub members: Vec<Circle>,
    pub enclosing: Circle,
}

/// Area-weighted centroid of the outer ring, `[lon, lat]`. Holes are
/// ignored. Rings with (near) zero area fall back to the vertex mean.
pub fn polygon_centroid(tenure: &OperationTenure) -> Result<[f64; 2], GeometryError> {
    ring_centroid(tenure.rings.first().map(Vec::as_slice).unwrap_or(&[]))
}

pub fn ring_centroid(ring: &[[f64; 2]]) -> Result<[f64; 2], GeometryError> {
    let first = *ring.first().ok_or(GeometryError::DegenerateGeometry)?;
    // work relative to the first vertex so large coordinates keep precision
    let local: Vec<[f64; 2]> = ring
        .iter()
        .map(|p| [p[0] - first[0], p[1] - first[1]])
        .collect();
    let n = local.len();
    let mut twice_area = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = local[i];
        let [x1, y1] = local[(i + 1) % n];
        let cross = x0 * y1 - x1 * y0;
        twice_area += cross;
        sx += (x0 + x1) * cross;
        sy += (y0 + y1) * cross;
    }
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &local {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let extent = (max_x - min_x).hypot(max_y - min_y);
    if twice_area.abs() <= 1e-12 * extent * extent || twice_area == 0.0 {
        let inv = 1.0 / n as f64;
        let mx = local.iter().map(|p| p[0]).sum::<f64>() * inv;
        let my = local.iter().map(|p| p[1]).sum::<f64>() * inv;
        return Ok([mx + first[0], my + first[1]]);
    }
    let k = 1.0 / (3.0 * twice_area);
    Ok([sx * k + first[0], sy * k + first[1]])
}

/// Front-chain sibling packing of `radii`, in the given order.
///
/// The first circle sits at the origin and the second touches it on the +x
/// side. Every later circle is placed tangent to a neighbouring pair on the
/// advancing front, starting from the pair whose weighted midpoint lies
/// nearest the origin; front circles it would overlap are cut out of the
/// chain and the placement is retried. The result is then shifted so the
/// enclosing circle is centred on the origin.
///
/// # Panics
///
/// If any radius is not finite and strictly positive.
pub fn pack_circles(radii: &[f64]) -> PackedLayout {
    assert!(
        radii.iter().all(|r| r.is_finite() && *r > 0.0),
        "pack_circles needs finite positive radii"
    );
    let n = radii.len();
    if n == 0 {
        return PackedLayout {
            members: Vec::new(),
            enclosing: Circle::ZERO,
        };
    }
    let max_r = radii.iter().cloned().fold(0.0, f64::max);
    let slack = PACK_TOLERANCE * 1e-3 * max_r;
    let mut c: Vec<Circle> = radii.iter().map(|&r| Circle::new(0.0, 0.0, r)).collect();

    if n >= 2 {
        c[1].cx = c[0].r + c[1].r;
    }
    if n >= 3 {
        c[2] = place(&c[1], &c[0], c[2].r);
    }
    if n > 3 {
        let mut next = vec![0usize; n];
        let mut prev = vec![0usize; n];
        // front chain 0 -> 1 -> 2 -> 0
        next[0] = 1;
        next[1] = 2;
        next[2] = 0;
        prev[1] = 0;
        prev[2] = 1;
        prev[0] = 2;
        let (mut a, mut b) = (0usize, 1usize);
        let mut i = 3;
        'pack: while i < n {
            c[i] = place(&c[a], &c[b], c[i].r);
            let (mut j, mut k) = (next[b], prev[a]);
            let (mut sj, mut sk) = (c[b].r, c[a].r);
            loop {
                if sj <= sk {
                    if overlaps(&c[j], &c[i], slack) {
                        b = j;
                        next[a] = b;
                        prev[b] = a;
                        continue 'pack;
                    }
                    sj += c[j].r;
                    j = next[j];
                } else {
                    if overlaps(&c[k], &c[i], slack) {
                        a = k;
                        next[a] = b;
                        prev[b] = a;
                        continue 'pack;
                    }
                    sk += c[k].r;
                    k = prev[k];
                }
                if j == next[k] {
                    break;
                }
            }
            // splice i between a and b
            prev[i] = a;
            next[i] = b;
            next[a] = i;
            prev[b] = i;
            b = i;
            // restart from the front pair nearest the origin
            let mut best = front_score(&c[a], &c[next[a]]);
            let mut node = next[i];
            while node != b {
                let s = front_score(&c[node], &c[next[node]]);
                if s < best {
                    a = node;
                    best = s;
                }
                node = next[node];
            }
            b = next[a];
            i += 1;
        }
    }

    let enclosing = min_enclosing_circle(&c);
    let (dx, dy) = (-enclosing.cx, -enclosing.cy);
    PackedLayout {
        members: c.iter().map(|m| m.translated(dx, dy)).collect(),
        enclosing: Circle::new(0.0, 0.0, enclosing.r),
    }
}

/// Circle of radius `r` tangent to both `a` and `b`.
fn place(a: &Circle, b: &Circle, r: f64) -> Circle {
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    let d2 = dx * dx + dy * dy;
    if d2 == 0.0 {
        return Circle::new(a.cx + r, a.cy, r);
    }
    let a2 = (a.r + r).powi(2);
    let b2 = (b.r + r).powi(2);
    if a2 > b2 {
        let x = (d2 + b2 - a2) / (2.0 * d2);
        let y = (b2 / d2 - x * x).max(0.0).sqrt();
        Circle::new(b.cx - x * dx - y * dy, b.cy - x * dy + y * dx, r)
    } else {
        let x = (d2 + a2 - b2) / (2.0 * d2);
        let y = (a2 / d2 - x * x).max(0.0).sqrt();
        Circle::new(a.cx + x * dx - y * dy, a.cy + x * dy + y * dx, r)
    }
}

fn overlaps(a: &Circle, b: &Circle, slack: f64) -> bool {
    let dr = a.r + b.r - slack;
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

/// Squared distance from the origin to the radius-weighted contact point of
/// two neighbouring front circles.
fn front_score(a: &Circle, b: &Circle) -> f64 {
    let ab = a.r + b.r;
    let x = (a.cx * b.r + b.cx * a.r) / ab;
    let y = (a.cy * b.r + b.cy * a.r) / ab;
    x * x + y * y
}

/// Smallest circle containing every circle in `members`.
///
/// Incremental basis construction over the members in input order: whenever
/// a member escapes the current circle the support basis is extended with it
/// and the scan restarts. Empty input yields [`Circle::ZERO`].
pub fn min_enclosing_circle(members: &[Circle]) -> Circle {
    let Some(first) = members.first() else {
        return Circle::ZERO;
    };
    let mut basis: Vec<Circle> = Vec::with_capacity(3);
    let mut enclosing: Option<Circle> = None;
    let mut i = 0;
    let mut steps = 0usize;
    let step_cap = 64 * members.len() * members.len() + 64;
    while i < members.len() {
        let p = members[i];
        if let Some(e) = enclosing.filter(|e| encloses_weak(e, &p)) {
            enclosing = Some(e);
            i += 1;
            continue;
        }
        steps += 1;
        if steps > step_cap {
            return exhaustive_enclosing(members);
        }
        basis = extend_basis(&basis, p);
        enclosing = Some(enclose_basis(&basis));
        i = 0;
    }
    enclosing.unwrap_or(*first)
}

fn encloses_not(a: &Circle, b: &Circle) -> bool {
    let dr = a.r - b.r;
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    dr < 0.0 || dr * dr < dx * dx + dy * dy
}

fn encloses_weak(a: &Circle, b: &Circle) -> bool {
    let dr = a.r - b.r + a.r.max(b.r).max(1.0) * ENCLOSE_TOLERANCE;
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

fn encloses_weak_all(a: &Circle, basis: &[Circle]) -> bool {
    basis.iter().all(|b| encloses_weak(a, b))
}

fn extend_basis(basis: &[Circle], p: Circle) -> Vec<Circle> {
    if encloses_weak_all(&p, basis) {
        return vec![p];
    }
    for b in basis {
        if encloses_not(&p, b) {
            if let Some(e) = enclose_two(b, &p) {
                if encloses_weak_all(&e, basis) {
                    return vec![*b, p];
                }
            }
        }
    }
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let (bi, bj) = (&basis[i], &basis[j]);
            let ok_pairs = [
                enclose_two(bi, bj).map(|e| encloses_not(&e, &p)),
                enclose_two(bi, &p).map(|e| encloses_not(&e, bj)),
                enclose_two(bj, &p).map(|e| encloses_not(&e, bi)),
            ];
            if ok_pairs.iter().all(|x| x == &Some(true)) {
                if let Some(e) = enclose_three(bi, bj, &p) {
                    if encloses_weak_all(&e, basis) {
                        return vec![*bi, *bj, p];
                    }
                }
            }
        }
    }
    // numerically degenerate configuration: pick the best subset directly
    let mut pool = basis.to_vec();
    pool.push(p);
    best_subset_basis(&pool)
}

fn enclose_basis(basis: &[Circle]) -> Circle {
    match basis {
        [a] => *a,
        [a, b] => enclose_two(a, b).unwrap_or_else(|| exhaustive_enclosing(basis)),
        [a, b, c] => enclose_three(a, b, c).unwrap_or_else(|| exhaustive_enclosing(basis)),
        _ => exhaustive_enclosing(basis),
    }
}

/// Smallest circle containing `a` and `b`, tangent to both.
fn enclose_two(a: &Circle, b: &Circle) -> Option<Circle> {
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    let dr = b.r - a.r;
    let l = dx.hypot(dy);
    if l == 0.0 {
        return None;
    }
    let e = Circle::new(
        (a.cx + b.cx + dx / l * dr) / 2.0,
        (a.cy + b.cy + dy / l * dr) / 2.0,
        (l + a.r + b.r) / 2.0,
    );
    e.r.is_finite().then_some(e)
}

/// Circle internally tangent to `a`, `b` and `c`.
///
/// Subtracting the tangency conditions pairwise leaves the centre linear in
/// the radius; substituting back gives a quadratic in the radius.
fn enclose_three(a: &Circle, b: &Circle, c: &Circle) -> Option<Circle> {
    let (x1, y1, r1) = (a.cx, a.cy, a.r);
    let (x2, y2, r2) = (b.cx, b.cy, b.r);
    let (x3, y3, r3) = (c.cx, c.cy, c.r);
    let a2 = x1 - x2;
    let a3 = x1 - x3;
    let b2 = y1 - y2;
    let b3 = y1 - y3;
    let c2 = r2 - r1;
    let c3 = r3 - r1;
    let d1 = x1 * x1 + y1 * y1 - r1 * r1;
    let d2 = d1 - x2 * x2 - y2 * y2 + r2 * r2;
    let d3 = d1 - x3 * x3 - y3 * y3 + r3 * r3;
    let ab = a3 * b2 - a2 * b3;
    if ab == 0.0 {
        return None;
    }
    let xa = (b2 * d3 - b3 * d2) / (ab * 2.0) - x1;
    let xb = (b3 * c2 - b2 * c3) / ab;
    let ya = (a3 * d2 - a2 * d3) / (ab * 2.0) - y1;
    let yb = (a2 * c3 - a3 * c2) / ab;
    let qa = xb * xb + yb * yb - 1.0;
    let qb = 2.0 * (r1 + xa * xb + ya * yb);
    let qc = xa * xa + ya * ya - r1 * r1;
    let r = -(if qa.abs() > 1e-6 {
        (qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)
    } else {
        qc / qb
    });
    let e = Circle::new(x1 + xa + xb * r, y1 + ya + yb * r, r);
    (e.cx.is_finite() && e.cy.is_finite() && e.r.is_finite() && e.r >= 0.0).then_some(e)
}

/// Smallest enclosing circle spanned by a subset of at most three circles of
/// `pool`; used only when the incremental path hits a degenerate case.
fn best_subset_basis(pool: &[Circle]) -> Vec<Circle> {
    let mut best: Option<(Circle, Vec<Circle>)> = None;
    let mut consider = |e: Option<Circle>, set: Vec<Circle>| {
        if let Some(e) = e {
            if pool.iter().all(|m| encloses_weak(&e, m))
                && best.as_ref().is_none_or(|(b, _)| e.r < b.r)
            {
                best = Some((e, set));
            }
        }
    };
    for (i, a) in pool.iter().enumerate() {
        consider(Some(*a), vec![*a]);
        for (j, b) in pool.iter().enumerate().skip(i + 1) {
            consider(enclose_two(a, b), vec![*a, *b]);
            for c in pool.iter().skip(j + 1) {
                consider(enclose_three(a, b, c), vec![*a, *b, *c]);
            }
        }
    }
    best.map(|(_, set)| set).unwrap_or_else(|| pool.to_vec())
}

fn exhaustive_enclosing(members: &[Circle]) -> Circle {
    let set = best_subset_basis(members);
    let candidate = match set.as_slice() {
        [a] => Some(*a),
        [a, b] => enclose_two(a, b),
        [a, b, c] => enclose_three(a, b, c),
        _ => None,
    };
    candidate.unwrap_or_else(|| {
        // last resort: centroid-centred circle that reaches every member
        let n = members.len() as f64;
        let cx = members.iter().map(|m| m.cx).sum::<f64>() / n;
        let cy = members.iter().map(|m| m.cy).sum::<f64>() / n;
        let probe = Circle::new(cx, cy, 0.0);
        let r = members
            .iter()
            .map(|m| probe.distance_to(m) + m.r)
            .fold(0.0, f64::max);
        Circle::new(cx, cy, r)
    })
}

/// An aspect range as a single clockwise arc from `start_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start_deg: f64,
    pub sweep_deg: f64,
}

pub fn interval_to_arc(aspect: &AspectInterval) -> Arc {
    if aspect.is_full_circle() {
        Arc {
            start_deg: 0.0,
            sweep_deg: 360.0,
        }
    } else {
        Arc {
            start_deg: aspect.start_deg(),
            sweep_deg: aspect.angular_length(),
        }
    }
}
