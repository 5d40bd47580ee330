//! Planar primitives: points, angles, sides, validated polygons, ray casting
//! and the reflection law.
//!
//! Everything that does arithmetic on coordinates is generic over
//! [`Scalar`], so the same code runs in `f64` and in exact rationals.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Rational, Scalar};

/// Corner proximity (table units) below which a hit counts as a corner hit.
pub const EPS_CORNER: f64 = 1e-9;
/// Angular distance (radians) below which an impact counts as tangential.
pub const EPS_GRAZING: f64 = 1e-9;
/// Minimum free path accepted by the ray caster.
pub const EPS_TIME: f64 = 1e-12;
/// Distance from a side within which a point counts as lying on it.
pub const EPS_ON_SIDE: f64 = 1e-9;

/// Float-mode tolerances. Exact mode ignores them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub corner: f64,
    pub grazing: f64,
    pub time: f64,
    pub on_side: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            corner: EPS_CORNER,
            grazing: EPS_GRAZING,
            time: EPS_TIME,
            on_side: EPS_ON_SIDE,
        }
    }
}

/// A planar vector or point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vec2<S = f64> {
    pub x: S,
    pub y: S,
}

pub type Point = Vec2<f64>;

impl<S: Scalar> Vec2<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x.clone() + o.x.clone(), self.y.clone() + o.y.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone())
    }

    pub fn scale(&self, k: &S) -> Self {
        Self::new(self.x.clone() * k.clone(), self.y.clone() * k.clone())
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.x.clone(), -self.y.clone())
    }

    pub fn dot(&self, o: &Self) -> S {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone()
    }

    pub fn cross(&self, o: &Self) -> S {
        self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone()
    }

    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    pub fn to_f64(&self) -> Point {
        Point::new(self.x.to_f64(), self.y.to_f64())
    }

    pub fn norm_f64(&self) -> f64 {
        let p = self.to_f64();
        p.x.hypot(p.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite_value() && self.y.is_finite_value()
    }
}

impl Point {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, o: &Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

impl Vec2<Rational> {
    /// Exact image of an `f64` point.
    pub fn from_f64(p: &Point) -> Option<Self> {
        Some(Self::new(Rational::from_float(p.x)?, Rational::from_float(p.y)?))
    }
}

/// A direction angle, canonicalised to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Self {
        let t = theta.rem_euclid(TAU);
        Angle(if t >= TAU { 0.0 } else { t })
    }

    pub fn from_vector(x: f64, y: f64) -> Self {
        Angle::new(y.atan2(x))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The same angle in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    pub fn unit(self) -> Point {
        Point::new(self.0.cos(), self.0.sin())
    }

    pub fn opposite(self) -> Angle {
        Angle::new(self.0 + PI)
    }

    /// Shortest circular distance, in `[0, π]`.
    pub fn distance(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).rem_euclid(TAU);
        d.min(TAU - d)
    }
}

/// Angle between two vectors, in `[0, π]`.
pub fn vector_angle(u: &Point, v: &Point) -> f64 {
    u.x.mul_add(v.y, -u.y * v.x).abs().atan2(u.x.mul_add(v.x, u.y * v.y))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("a polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("side {0} has zero length")]
    DegenerateSide(usize),
    #[error("boundary self-intersects (sides {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("ray left the table without hitting a side")]
    NoHit,
    #[error("ray hits the corner ({}, {}) of side {side}", .point.x, .point.y)]
    CornerHit { side: usize, point: Point, tau: f64 },
    #[error("tangential impact")]
    GrazingImpact,
    #[error("point does not lie on the side")]
    OffSide,
}

/// One side of a polygon, from `a` to `b`, with its derived float data.
#[derive(Clone, Debug, PartialEq)]
pub struct Side<S = f64> {
    pub a: Vec2<S>,
    pub b: Vec2<S>,
    /// Angle with the positive horizontal axis, in `[0, π)`.
    pub inclination: Angle,
    pub length: f64,
    pub inward_normal: Angle,
    tangent: Point,
    normal: Point,
}

impl<S: Scalar> Side<S> {
    /// Side with the interior on its left, as in a counterclockwise polygon.
    pub fn new(a: Vec2<S>, b: Vec2<S>) -> Self {
        let e = b.sub(&a).to_f64();
        let length = e.norm();
        let tangent = Point::new(e.x / length, e.y / length);
        let normal = Point::new(-tangent.y, tangent.x);
        let inclination = Angle::new(e.y.atan2(e.x).rem_euclid(PI));
        Side {
            a,
            b,
            inclination: if inclination.radians() >= PI {
                Angle::new(0.0)
            } else {
                inclination
            },
            length,
            inward_normal: Angle::from_vector(normal.x, normal.y),
            tangent,
            normal,
        }
    }

    /// The same segment with the interior on its right.
    pub fn with_interior_on_right(mut self) -> Self {
        self.normal = Point::new(-self.normal.x, -self.normal.y);
        self.inward_normal = self.inward_normal.opposite();
        self
    }

    pub fn edge(&self) -> Vec2<S> {
        self.b.sub(&self.a)
    }

    /// Unit vector from `a` to `b`.
    pub fn tangent(&self) -> Point {
        self.tangent
    }

    /// Unit inward normal.
    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn point_at(&self, r: f64) -> Point {
        let a = self.a.to_f64();
        Point::new(a.x + r * self.tangent.x, a.y + r * self.tangent.y)
    }

    /// Incidence angle of an arriving velocity, measured from the inward
    /// normal, positive when the motion heads toward `b`.
    pub fn incidence(&self, v: &Point) -> f64 {
        let along = v.x * self.tangent.x + v.y * self.tangent.y;
        let into = -(v.x * self.normal.x + v.y * self.normal.y);
        along.atan2(into)
    }

    /// Angle of a departing velocity from the inward normal, positive
    /// toward `b`.
    pub fn departure(&self, v: &Point) -> f64 {
        let along = v.x * self.tangent.x + v.y * self.tangent.y;
        let away = v.x * self.normal.x + v.y * self.normal.y;
        along.atan2(away)
    }

    /// Unit velocity leaving the side at angle `phi` from the inward normal.
    pub fn departure_vector(&self, phi: f64) -> Point {
        let (s, c) = phi.sin_cos();
        Point::new(
            c * self.normal.x + s * self.tangent.x,
            c * self.normal.y + s * self.tangent.y,
        )
    }
}

/// A validated simple polygon, counterclockwise, without collinear runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon<S = f64> {
    vertices: Vec<Vec2<S>>,
    sides: Vec<Side<S>>,
}

pub type PolygonTable = Polygon<f64>;
pub type ExactTable = Polygon<Rational>;

fn orient<S: Scalar>(a: &Vec2<S>, b: &Vec2<S>, c: &Vec2<S>) -> i8 {
    let v = b.sub(a).cross(&c.sub(a));
    if v.is_zero_value() {
        0
    } else if v > S::zero() {
        1
    } else {
        -1
    }
}

fn within_box<S: Scalar>(a: &Vec2<S>, b: &Vec2<S>, p: &Vec2<S>) -> bool {
    let (lx, hx) = if a.x <= b.x { (&a.x, &b.x) } else { (&b.x, &a.x) };
    let (ly, hy) = if a.y <= b.y { (&a.y, &b.y) } else { (&b.y, &a.y) };
    *lx <= p.x && p.x <= *hx && *ly <= p.y && p.y <= *hy
}

/// Closed-segment intersection test.
pub fn segments_intersect<S: Scalar>(p1: &Vec2<S>, p2: &Vec2<S>, q1: &Vec2<S>, q2: &Vec2<S>) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && within_box(q1, q2, p1))
        || (d2 == 0 && within_box(q1, q2, p2))
        || (d3 == 0 && within_box(p1, p2, q1))
        || (d4 == 0 && within_box(p1, p2, q2))
}

/// Validates a vertex list and builds the table: merges collinear runs,
/// normalises to counterclockwise order (keeping the first vertex first)
/// and rejects degenerate or self-intersecting boundaries.
pub fn validate_polygon<S: Scalar>(vertices: Vec<Vec2<S>>) -> Result<Polygon<S>, GeometryError> {
    if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    let mut v = vertices;
    if v.len() < 3 {
        return Err(GeometryError::TooFewVertices(v.len()));
    }
    let n = v.len();
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return Err(GeometryError::DegenerateSide(i));
        }
    }
    loop {
        let n = v.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        let mut removed = false;
        for i in 0..n {
            let prev = &v[(i + n - 1) % n];
            let cur = &v[i];
            let next = &v[(i + 1) % n];
            let e1 = cur.sub(prev);
            let e2 = next.sub(cur);
            let scale = e1.norm_f64() * e2.norm_f64();
            if e1.cross(&e2).near_zero(1e-12 * scale) {
                if e1.dot(&e2) > S::zero() {
                    v.remove(i);
                    removed = true;
                    break;
                }
                return Err(GeometryError::SelfIntersecting((i + n - 1) % n, i));
            }
        }
        if !removed {
            break;
        }
    }
    let n = v.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(&v[i], &v[(i + 1) % n], &v[j], &v[(j + 1) % n]) {
                return Err(GeometryError::SelfIntersecting(i, j));
            }
        }
    }
    let mut area2 = S::zero();
    for i in 0..n {
        area2 = area2 + v[i].cross(&v[(i + 1) % n]);
    }
    if area2.is_zero_value() {
        return Err(GeometryError::ZeroArea);
    }
    if area2 < S::zero() {
        v[1..].reverse();
    }
    let sides = (0..n)
        .map(|i| Side::new(v[i].clone(), v[(i + 1) % n].clone()))
        .collect();
    Ok(Polygon { vertices: v, sides })
}

impl<S: Scalar> Polygon<S> {
    pub fn new(vertices: Vec<Vec2<S>>) -> Result<Self, GeometryError> {
        validate_polygon(vertices)
    }

    pub fn vertices(&self) -> &[Vec2<S>] {
        &self.vertices
    }

    pub fn sides(&self) -> &[Side<S>] {
        &self.sides
    }

    pub fn side(&self, i: usize) -> &Side<S> {
        &self.sides[i]
    }

    pub fn side_count(&self) -> usize {
        self.sides.len()
    }

    /// Float copy of the table (no re-validation; the shape is unchanged).
    pub fn to_f64(&self) -> PolygonTable {
        let vertices: Vec<Point> = self.vertices.iter().map(Vec2::to_f64).collect();
        let n = vertices.len();
        let sides = (0..n).map(|i| Side::new(vertices[i], vertices[(i + 1) % n])).collect();
        Polygon { vertices, sides }
    }

    /// Lower-left and upper-right corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            let p = v.to_f64();
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Point> = self.vertices.iter().map(Vec2::to_f64).collect();
        let mut d: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                d = d.max(p.distance(q));
            }
        }
        d
    }

    pub fn perimeter(&self) -> f64 {
        self.sides.iter().map(|s| s.length).sum()
    }

    /// Twice the signed area, exactly.
    pub fn twice_area(&self) -> S {
        let n = self.vertices.len();
        let mut a = S::zero();
        for i in 0..n {
            a = a + self.vertices[i].cross(&self.vertices[(i + 1) % n]);
        }
        a
    }

    /// Interior angle at vertex `i` (between sides `i-1` and `i`), radians.
    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n].to_f64();
        let cur = self.vertices[i].to_f64();
        let next = self.vertices[(i + 1) % n].to_f64();
        let back = Point::new(prev.x - cur.x, prev.y - cur.y);
        let fwd = Point::new(next.x - cur.x, next.y - cur.y);
        // counterclockwise sweep from the forward edge to the backward edge
        let ang = (fwd.x * back.y - fwd.y * back.x).atan2(fwd.x * back.x + fwd.y * back.y);
        ang.rem_euclid(TAU)
    }

    /// Point-in-polygon test that also accepts points within `tol` of the
    /// boundary.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let mut inside = false;
        for side in &self.sides {
            let a = side.a.to_f64();
            let b = side.b.to_f64();
            if point_segment_distance(p, &a, &b) <= tol {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

impl ExactTable {
    /// Exact table from float vertices (each double is converted exactly).
    pub fn from_f64_vertices(vertices: &[Point]) -> Result<Self, GeometryError> {
        let mut exact = Vec::with_capacity(vertices.len());
        for (i, p) in vertices.iter().enumerate() {
            exact.push(Vec2::<Rational>::from_f64(p).ok_or(GeometryError::NonFinite(i))?);
        }
        validate_polygon(exact)
    }
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ex = b.x - a.x;
    let ey = b.y - a.y;
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * ex + (p.y - a.y) * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(&Point::new(a.x + t * ex, a.y + t * ey))
}

/// First boundary intersection of a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionCandidate<S = f64> {
    pub side: usize,
    /// Ray parameter: the hit is `origin + param * direction`.
    pub param: S,
    /// Free-path length `param * |direction|`.
    pub tau: f64,
    pub hit: Vec2<S>,
    /// Arclength of the hit from the side's start point.
    pub r: f64,
}

/// Casts a ray `origin + t * direction`, `t > 0`, against the table.
///
/// The direction need not be normalised; in float mode it is expected to be
/// a unit vector so that `param` is an arc length.
pub fn cast_ray<S: Scalar>(
    table: &Polygon<S>,
    origin: &Vec2<S>,
    direction: &Vec2<S>,
    exclude_side: Option<usize>,
    tol: &Tolerances,
) -> Result<CollisionCandidate<S>, GeometryError> {
    let speed = direction.norm_f64();
    let mut best: Option<(usize, S, S)> = None;
    for (i, side) in table.sides.iter().enumerate() {
        if Some(i) == exclude_side {
            continue;
        }
        let e = side.edge();
        let den = direction.cross(&e);
        if den.is_zero_value() {
            continue;
        }
        let w = side.a.sub(origin);
        let t = w.cross(&e) / den.clone();
        let ahead = if S::EXACT {
            t > S::zero()
        } else {
            t.to_f64() * speed > tol.time
        };
        if !ahead {
            continue;
        }
        if let Some((_, bt, _)) = &best {
            if t >= *bt {
                continue;
            }
        }
        let u = w.cross(direction) / den;
        let on = if S::EXACT {
            u >= S::zero() && u <= S::one()
        } else {
            let slack = tol.corner / side.length;
            let uf = u.to_f64();
            uf >= -slack && uf <= 1.0 + slack
        };
        if on {
            best = Some((i, t, u));
        }
    }
    let (side_idx, t, u) = best.ok_or(GeometryError::NoHit)?;
    let side = &table.sides[side_idx];
    let tau = t.to_f64() * speed;
    let uf = u.to_f64();
    let corner = if S::EXACT {
        u.is_zero_value() || u == S::one()
    } else {
        uf * side.length <= tol.corner || (1.0 - uf) * side.length <= tol.corner
    };
    if corner {
        let vertex = if uf < 0.5 { &side.a } else { &side.b };
        return Err(GeometryError::CornerHit {
            side: side_idx,
            point: vertex.to_f64(),
            tau,
        });
    }
    let hit = origin.add(&direction.scale(&t));
    Ok(CollisionCandidate {
        side: side_idx,
        param: t,
        tau,
        hit,
        r: (uf * side.length).clamp(0.0, side.length),
    })
}

/// Ray cast from an angle; `origin + tau * (cos θ, sin θ)`.
pub fn ray_cast(
    origin: Point,
    direction: Angle,
    table: &PolygonTable,
    exclude_side: Option<usize>,
) -> Result<CollisionCandidate<f64>, GeometryError> {
    cast_ray(table, &origin, &direction.unit(), exclude_side, &Tolerances::default())
}

/// Mirror image of `v` in the line spanned by `e`: `2 (v·e)/(e·e) e − v`.
pub fn mirror_in_line<S: Scalar>(v: &Vec2<S>, e: &Vec2<S>) -> Vec2<S> {
    let k = v.dot(e) * S::from_i64(2) / e.norm_sq();
    e.scale(&k).sub(v)
}

/// Law of reflection on angles: `(2γ − θ) mod 2π`.
pub fn specular_reflect(incoming: Angle, side_inclination: Angle) -> Result<Angle, GeometryError> {
    let d = (incoming.radians() - side_inclination.radians()).rem_euclid(PI);
    if d < EPS_GRAZING || PI - d < EPS_GRAZING {
        return Err(GeometryError::GrazingImpact);
    }
    Ok(Angle::new(2.0 * side_inclination.radians() - incoming.radians()))
}

/// Boundary chart of an impact: arclength from the side's start point and
/// incidence angle from the inward normal, positive toward the side's end.
pub fn boundary_coords(hit: Point, incoming: Angle, side: &Side<f64>) -> Result<(f64, f64), GeometryError> {
    let a = side.a;
    let rel = Point::new(hit.x - a.x, hit.y - a.y);
    let t = side.tangent();
    let n = side.normal();
    let along = rel.x * t.x + rel.y * t.y;
    let off = rel.x * n.x + rel.y * n.y;
    if off.abs() > EPS_ON_SIDE || along < -EPS_ON_SIDE || along > side.length + EPS_ON_SIDE {
        return Err(GeometryError::OffSide);
    }
    let v = incoming.unit();
    if -(v.x * n.x + v.y * n.y) <= 0.0 {
        return Err(GeometryError::GrazingImpact);
    }
    Ok((along.clamp(0.0, side.length), side.incidence(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn square() -> PolygonTable {
        validate_polygon(vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_square_sides() {
        let sq = square();
        assert_eq!(sq.side_count(), 4);
        let inc: Vec<f64> = sq.sides().iter().map(|s| s.inclination.radians()).collect();
        assert_eq!(inc, vec![0.0, FRAC_PI_2, 0.0, FRAC_PI_2]);
        assert_eq!(sq.perimeter(), 4.0);
        let normals: Vec<Point> = sq.sides().iter().map(|s| s.normal()).collect();
        assert!(close(normals[0].y, 1.0, 1e-15));
        assert!(close(normals[1].x, -1.0, 1e-15));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let cw = validate_polygon(vec![p(0., 0.), p(0., 1.), p(1., 1.), p(1., 0.)]).unwrap();
        assert_eq!(cw, square());
    }

    #[test]
    fn zero_length_side_rejected() {
        let err = validate_polygon(vec![p(0., 0.), p(1., 0.), p(0., 0.)]).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateSide(_)));
        let err = validate_polygon(vec![p(0., 0.), p(1., 0.), p(1., 0.), p(0., 1.)]).unwrap_err();
        assert_eq!(err, GeometryError::DegenerateSide(1));
    }

    #[test]
    fn collinear_runs_are_merged() {
        let t = validate_polygon(vec![p(0., 0.), p(0.5, 0.), p(1., 0.), p(1., 1.), p(0.5, 1.), p(0., 1.)]).unwrap();
        assert_eq!(t.vertices(), square().vertices());
    }

    #[test]
    fn bowtie_rejected() {
        let err = validate_polygon(vec![p(0., 0.), p(1., 1.), p(1., 0.), p(0., 1.)]).unwrap_err();
        assert!(matches!(err, GeometryError::SelfIntersecting(..)));
        let spike = validate_polygon(vec![p(0., 0.), p(2., 0.), p(1., 0.), p(1., 1.)]).unwrap_err();
        assert!(matches!(spike, GeometryError::SelfIntersecting(..)));
    }

    #[test]
    fn axis_ray() {
        let c = ray_cast(p(0.5, 0.5), Angle::new(0.0), &square(), None).unwrap();
        assert_eq!(c.side, 1);
        assert_eq!(c.hit, p(1.0, 0.5));
        assert_eq!(c.tau, 0.5);
        assert_eq!(c.r, 0.5);
    }

    #[test]
    fn diagonal_ray_from_bottom() {
        let c = ray_cast(p(0.25, 0.0), Angle::new(FRAC_PI_4), &square(), Some(0)).unwrap();
        // line y = x - 1/4 meets x = 1 at y = 3/4
        assert_eq!(c.side, 1);
        assert!(close(c.hit.x, 1.0, 1e-15) && close(c.hit.y, 0.75, 1e-15));
        assert!(close(c.tau, 0.75 * 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn diagonal_into_corner() {
        let err = ray_cast(p(0.0, 0.0), Angle::new(FRAC_PI_4), &square(), None).unwrap_err();
        match err {
            GeometryError::CornerHit { point, .. } => assert_eq!(point, p(1.0, 1.0)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn exact_cast_hits_rational_point() {
        let sq: ExactTable = validate_polygon(vec![
            Vec2::new(ratio(0, 1), ratio(0, 1)),
            Vec2::new(ratio(1, 1), ratio(0, 1)),
            Vec2::new(ratio(1, 1), ratio(1, 1)),
            Vec2::new(ratio(0, 1), ratio(1, 1)),
        ])
        .unwrap();
        let o = Vec2::new(ratio(1, 4), ratio(0, 1));
        let d = Vec2::new(ratio(1, 1), ratio(1, 1));
        let c = cast_ray(&sq, &o, &d, None, &Tolerances::default()).unwrap();
        assert_eq!(c.hit, Vec2::new(ratio(1, 1), ratio(3, 4)));
        assert_eq!(c.param, ratio(3, 4));
        let corner = cast_ray(
            &sq,
            &Vec2::new(ratio(0, 1), ratio(0, 1)),
            &d,
            None,
            &Tolerances::default(),
        );
        assert!(matches!(corner, Err(GeometryError::CornerHit { .. })));
    }

    #[test]
    fn no_hit_from_outside() {
        let err = ray_cast(p(2.0, 0.5), Angle::new(0.0), &square(), None).unwrap_err();
        assert_eq!(err, GeometryError::NoHit);
    }

    #[test]
    fn reflection_examples() {
        let r = specular_reflect(Angle::new(7.0 * FRAC_PI_4), Angle::new(0.0)).unwrap();
        assert!(close(r.radians(), FRAC_PI_4, 1e-15));
        let r = specular_reflect(Angle::new(FRAC_PI_6), Angle::new(FRAC_PI_4)).unwrap();
        assert!(close(r.radians(), FRAC_PI_3, 1e-15));
        assert_eq!(
            specular_reflect(Angle::new(0.0), Angle::new(0.0)),
            Err(GeometryError::GrazingImpact)
        );
        assert_eq!(
            specular_reflect(Angle::new(PI), Angle::new(0.0)),
            Err(GeometryError::GrazingImpact)
        );
    }

    #[test]
    fn reflection_matches_mirror_matrix() {
        // reflection across the line at angle γ is [[cos 2γ, sin 2γ], [sin 2γ, −cos 2γ]]
        for (theta, gamma) in [(FRAC_PI_6, FRAC_PI_4), (1.0, 0.3), (4.0, 2.5), (5.9, 0.1)] {
            let (s2, c2) = (2.0 * gamma).sin_cos();
            let v = Angle::new(theta).unit();
            let m = p(c2 * v.x + s2 * v.y, s2 * v.x - c2 * v.y);
            let r = specular_reflect(Angle::new(theta), Angle::new(gamma)).unwrap();
            assert!(r.distance(Angle::from_vector(m.x, m.y)) < 1e-14);
            let e = Angle::new(gamma).unit();
            let mv = mirror_in_line(&v, &e);
            assert!(r.distance(Angle::from_vector(mv.x, mv.y)) < 1e-14);
        }
    }

    #[test]
    fn exact_mirror_is_involutive() {
        let v = Vec2::new(ratio(3, 1), ratio(-2, 1));
        let e = Vec2::new(ratio(1, 1), ratio(2, 1));
        let m = mirror_in_line(&v, &e);
        assert_eq!(m, Vec2::new(ratio(-17, 5), ratio(6, 5)));
        assert_eq!(mirror_in_line(&m, &e), v);
        assert_eq!(m.norm_sq(), v.norm_sq());
    }

    #[test]
    fn boundary_chart_examples() {
        let sq = square();
        let (r, phi) = boundary_coords(p(1.0, 0.5), Angle::new(0.0), sq.side(1)).unwrap();
        assert_eq!((r, phi), (0.5, 0.0));
        let top = Side::new(p(0.0, 1.0), p(1.0, 1.0)).with_interior_on_right();
        assert_eq!(top.inclination.radians(), 0.0);
        let (_, phi) = boundary_coords(p(0.5, 1.0), Angle::new(FRAC_PI_4), &top).unwrap();
        assert!(close(phi, FRAC_PI_4, 1e-15));
        assert_eq!(
            boundary_coords(p(2.0, 0.5), Angle::new(0.0), sq.side(1)),
            Err(GeometryError::OffSide)
        );
    }

    #[test]
    fn interior_angles_and_containment() {
        let tri = validate_polygon(vec![p(0., 0.), p(1., 0.), p(0., 1.)]).unwrap();
        assert!(close(tri.interior_angle(0), FRAC_PI_2, 1e-15));
        assert!(close(tri.interior_angle(1), FRAC_PI_4, 1e-15));
        let l = validate_polygon(vec![p(0., 0.), p(2., 0.), p(2., 1.), p(1., 1.), p(1., 2.), p(0., 2.)]).unwrap();
        assert!(close(l.interior_angle(3), 1.5 * PI, 1e-15));
        assert!(l.contains(&p(0.5, 1.5), 0.0));
        assert!(!l.contains(&p(1.5, 1.5), 1e-9));
        assert!(l.contains(&p(1.0, 1.5), 1e-9));
    }

    proptest! {
        #[test]
        fn reflection_is_involution(theta in 0.0..TAU, gamma in 0.0..PI) {
            if let Ok(r) = specular_reflect(Angle::new(theta), Angle::new(gamma)) {
                let back = specular_reflect(r, Angle::new(gamma)).unwrap();
                prop_assert!(back.distance(Angle::new(theta)) <= 1e-12);
            }
        }

        #[test]
        fn unit_speed(x in 0.01..0.99f64, y in 0.01..0.99f64, theta in 0.0..TAU) {
            let sq = square();
            if let Ok(c) = ray_cast(p(x, y), Angle::new(theta), &sq, None) {
                let d = c.hit.distance(&p(x, y));
                prop_assert!((d - c.tau).abs() <= 1e-12 * c.tau.max(1.0));
            }
        }

        #[test]
        fn cast_ignores_vertex_rotation(x in 0.05..0.95f64, y in 0.05..0.45f64, theta in 0.0..TAU, k in 0usize..6) {
            let verts = vec![p(0., 0.), p(2., 0.), p(2., 1.), p(1.2, 0.6), p(0.6, 1.3), p(0., 1.)];
            let a = validate_polygon(verts.clone()).unwrap();
            let mut rot = verts;
            rot.rotate_left(k);
            let b = validate_polygon(rot).unwrap();
            let ca = ray_cast(p(x, y), Angle::new(theta), &a, None);
            let cb = ray_cast(p(x, y), Angle::new(theta), &b, None);
            match (ca, cb) {
                (Ok(ca), Ok(cb)) => {
                    prop_assert!(ca.hit.distance(&cb.hit) <= 1e-12);
                    prop_assert_eq!(ca.tau, cb.tau);
                }
                (Err(_), Err(_)) => {}
                (ca, cb) => prop_assert!(false, "{:?} vs {:?}", ca, cb),
            }
        }
    }
}
