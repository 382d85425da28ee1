//! Convex polygon kernel.
//!
//! Everything the layout engine needs from 2D geometry lives here: areas,
//! centroids, convex-convex clipping, hulls and minimum distances. All
//! routines assume counter-clockwise convex input and work in plain `f64`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Tolerance (world units) for collinearity and contact decisions.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Orientation of the triple (a, b, c): positive for a left turn.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has repeated consecutive vertices at index {0}")]
    RepeatedVertex(usize),
    #[error("polygon has non-positive area {0}")]
    Degenerate(f64),
    #[error("polygon is clockwise")]
    Clockwise,
    #[error("polygon is not convex (reflex turn at vertex {0})")]
    NonConvex(usize),
    #[error("polygon winds around more than once")]
    SelfIntersecting,
    #[error("point set is degenerate (fewer than 3 non-collinear points)")]
    CollinearPoints,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    0.5 * acc
}

/// Checks a vertex ring against the convex polygon invariants.
///
/// Checks run in order: vertex count, finiteness, repeated vertices, area,
/// winding, convexity and total turning. The first failure is returned.
pub fn check_convex_ring(ring: &[Point]) -> Result<(), GeometryError> {
    let n = ring.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    for i in 0..n {
        if ring[i].distance(ring[(i + 1) % n]) <= GEOM_EPS {
            return Err(GeometryError::RepeatedVertex(i));
        }
    }
    let turns: Vec<f64> = (0..n)
        .map(|i| orient(ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]))
        .collect();
    let has_left = turns.iter().any(|&t| t > GEOM_EPS);
    let has_right = turns.iter().any(|&t| t < -GEOM_EPS);
    if has_left && has_right {
        let bad = turns
            .iter()
            .position(|&t| t < -GEOM_EPS)
            .filter(|_| signed_area(ring) >= 0.0)
            .or_else(|| turns.iter().position(|&t| t > GEOM_EPS))
            .unwrap_or(0);
        return Err(GeometryError::NonConvex(bad));
    }
    let area = signed_area(ring);
    if area.abs() <= GEOM_EPS {
        return Err(GeometryError::Degenerate(area));
    }
    if !has_left {
        // every turn is a right turn (or straight): clockwise if simple
        if total_turning(ring).abs() > 1.5 * std::f64::consts::TAU {
            return Err(GeometryError::SelfIntersecting);
        }
        return Err(GeometryError::Clockwise);
    }
    if area < 0.0 {
        return Err(GeometryError::SelfIntersecting);
    }
    // all left turns but winding twice or more: a star, not a convex polygon
    if total_turning(ring) > 1.5 * std::f64::consts::TAU {
        return Err(GeometryError::SelfIntersecting);
    }
    Ok(())
}

fn total_turning(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = ring[i] - ring[(i + n - 1) % n];
        let b = ring[(i + 1) % n] - ring[i];
        total += a.cross(b).atan2(a.dot(b));
    }
    total
}

/// A convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        check_convex_ring(&vertices)?;
        Ok(Self { vertices })
    }

    /// Wraps a ring without checking it. Callers must uphold the invariants.
    pub fn new_unchecked(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned box as a 4-vertex CCW polygon.
    pub fn from_box(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeometryError> {
        Self::new(vec![
            Point::new(xmin, ymin),
            Point::new(xmax, ymin),
            Point::new(xmax, ymax),
            Point::new(xmin, ymax),
        ])
    }

    /// Regular `n`-gon inscribed in the circle of the given radius, first vertex at angle `phase`.
    pub fn regular(center: Point, radius: f64, n: usize, phase: f64) -> Result<Self, GeometryError> {
        let vertices = (0..n)
            .map(|k| {
                let a = phase + std::f64::consts::TAU * k as f64 / n as f64;
                Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn translate(&self, v: Point) -> ConvexPolygon {
        ConvexPolygon::new_unchecked(self.vertices.iter().map(|&p| p + v).collect())
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// True when `p` lies inside or on the boundary (within `GEOM_EPS`).
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = a.distance(b);
            orient(a, b, p) >= -GEOM_EPS * len.max(1.0)
        })
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Shoelace area of a convex polygon.
pub fn area(p: &ConvexPolygon) -> f64 {
    signed_area(&p.vertices)
}

/// Area-weighted centroid.
pub fn centroid(p: &ConvexPolygon) -> Point {
    let v = &p.vertices;
    let n = v.len();
    // shift to the first vertex to keep the cross products well conditioned
    let origin = v[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p0 = v[i] - origin;
        let p1 = v[(i + 1) % n] - origin;
        let c = p0.cross(p1);
        a2 += c;
        cx += (p0.x + p1.x) * c;
        cy += (p0.y + p1.y) * c;
    }
    Point::new(origin.x + cx / (3.0 * a2), origin.y + cy / (3.0 * a2))
}

/// Clips `subject` against every edge half-plane of `clip`.
///
/// Returns the vertex ring of the intersection, possibly empty or degenerate.
pub fn clip_convex(subject: &ConvexPolygon, clip: &ConvexPolygon) -> Vec<Point> {
    let mut output = subject.vertices.clone();
    for (a, b) in clip.edges() {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let m = input.len();
        for i in 0..m {
            let cur = input[i];
            let prev = input[(i + m - 1) % m];
            let cur_in = orient(a, b, cur) >= 0.0;
            let prev_in = orient(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let dp = orient(a, b, p);
    let dq = orient(a, b, q);
    let t = dp / (dp - dq);
    p + (q - p) * t
}

/// Area of `p ∩ q`; zero when disjoint or when the overlap is below `GEOM_EPS`.
pub fn intersection_area(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let (plo, phi) = p.bounds();
    let (qlo, qhi) = q.bounds();
    if plo.x > qhi.x || qlo.x > phi.x || plo.y > qhi.y || qlo.y > phi.y {
        return 0.0;
    }
    // clip the polygon with fewer vertices by the other one; the area is symmetric
    let ring = if p.len() <= q.len() {
        clip_convex(p, q)
    } else {
        clip_convex(q, p)
    };
    let a = signed_area(&ring);
    if a <= GEOM_EPS {
        0.0
    } else {
        a
    }
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    false
}

/// Minimum distance between two segments (zero when they cross or touch).
pub fn segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Length of the shortest segment linking the two regions.
///
/// Zero when the polygons overlap or touch (within `GEOM_EPS`).
pub fn min_distance(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    if p.vertices.iter().any(|&v| q.contains(v)) || q.vertices.iter().any(|&v| p.contains(v)) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (a, b) in p.edges() {
        for (c, d) in q.edges() {
            best = best.min(segment_distance(a, b, c, d));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    if best <= GEOM_EPS {
        0.0
    } else {
        best
    }
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Result<ConvexPolygon, GeometryError> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.distance(*b) <= GEOM_EPS);
    if pts.len() < 3 {
        return Err(GeometryError::CollinearPoints);
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= GEOM_EPS {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= GEOM_EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 || signed_area(&hull) <= GEOM_EPS {
        return Err(GeometryError::CollinearPoints);
    }
    ConvexPolygon::new(hull)
}
