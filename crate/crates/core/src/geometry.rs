//! Planar geometry used by the simulator: points, oriented lines, isometries,
//! polygon clipping and segment/polygon interval queries.
//!
//! All polygons are simple vertex lists without a repeated closing vertex.
//! Half-plane clipping of a non-convex polygon may produce zero-area bridges
//! along the clip line; the even-odd queries below are insensitive to them.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn midpoint(self, other: Self) -> Self {
        self.lerp(other, 0.5)
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

/// An oriented line. Points with positive [`Line::side`] lie to its left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Point,
    pub direction: Point,
}

impl Line {
    /// Builds a line through `origin` along `direction`; the direction is
    /// normalised. Returns `None` for a zero direction.
    pub fn new(origin: Point, direction: Point) -> Option<Self> {
        let n = direction.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return None;
        }
        Some(Self {
            origin,
            direction: direction * (1.0 / n),
        })
    }

    pub fn through(a: Point, b: Point) -> Option<Self> {
        Self::new(a, b - a)
    }

    /// Signed distance; positive where `direction x (p - origin) > 0`, which is
    /// the left side with the y axis pointing up.
    pub fn side(&self, p: Point) -> f64 {
        self.direction.cross(p - self.origin)
    }

    pub fn reflect(&self, p: Point) -> Point {
        let d = p - self.origin;
        let along = self.direction * d.dot(self.direction);
        let perp = d - along;
        self.origin + along - perp
    }

    pub fn reversed(&self) -> Self {
        Self {
            origin: self.origin,
            direction: self.direction * -1.0,
        }
    }

    pub fn transformed(&self, iso: &Isometry) -> Self {
        let a = iso.apply(self.origin);
        let b = iso.apply(self.origin + self.direction);
        Self {
            origin: a,
            direction: b - a,
        }
    }
}

/// A distance-preserving affine map `p -> M p + t` with orthonormal `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: [[f64; 2]; 2],
    pub t: Point,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        m: [[1.0, 0.0], [0.0, 1.0]],
        t: Point::new(0.0, 0.0),
    };

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            m: [[c, -s], [s, c]],
            t: Point::default(),
        }
    }

    pub fn translation(t: Point) -> Self {
        Self {
            m: Self::IDENTITY.m,
            t,
        }
    }

    /// Mirror across the horizontal axis (`y -> -y`).
    pub fn mirror_y() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, -1.0]],
            t: Point::default(),
        }
    }

    pub fn reflection(line: &Line) -> Self {
        let d = line.direction;
        let m = [
            [d.x * d.x - d.y * d.y, 2.0 * d.x * d.y],
            [2.0 * d.x * d.y, d.y * d.y - d.x * d.x],
        ];
        let o = line.origin;
        let mo = Point::new(m[0][0] * o.x + m[0][1] * o.y, m[1][0] * o.x + m[1][1] * o.y);
        Self { m, t: o - mo }
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.m[0][0] * p.x + self.m[0][1] * p.y + self.t.x,
            self.m[1][0] * p.x + self.m[1][1] * p.y + self.t.y,
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn then_after(&self, other: &Isometry) -> Isometry {
        let a = &self.m;
        let b = &other.m;
        let m = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        Isometry {
            m,
            t: self.apply(other.t),
        }
    }

    pub fn inverse(&self) -> Isometry {
        let mt = [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]];
        let t = Point::new(
            -(mt[0][0] * self.t.x + mt[0][1] * self.t.y),
            -(mt[1][0] * self.t.x + mt[1][1] * self.t.y),
        );
        Isometry { m: mt, t }
    }

    /// True when the map reverses orientation.
    pub fn is_mirror(&self) -> bool {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0] < 0.0
    }
}

/// Shoelace area, positive for counter-clockwise order in a y-up frame.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    acc * 0.5
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Area-weighted centroid; falls back to the vertex mean for degenerate input.
pub fn centroid(poly: &[Point]) -> Point {
    let a = signed_area(poly);
    if a.abs() < 1e-9 {
        let n = poly.len().max(1) as f64;
        let s = poly.iter().fold(Point::default(), |acc, &p| acc + p);
        return s * (1.0 / n);
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Axis-aligned bounds `(min, max)`; `None` for an empty slice.
pub fn bounds<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<(Point, Point)> {
    let mut it = points.into_iter();
    let first = *it.next()?;
    Some(it.fold((first, first), |(lo, hi), p| {
        (
            Point::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

/// Sutherland–Hodgman clip against one half-plane. Keeps the left side of
/// `line` when `keep_left`, otherwise the right side; points on the line
/// are kept by both.
pub fn clip_half_plane(poly: &[Point], line: &Line, keep_left: bool) -> Vec<Point> {
    let sign = if keep_left { 1.0 } else { -1.0 };
    let inside = |p: Point| sign * line.side(p) >= 0.0;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let cur = poly[i];
        let prev = poly[(i + n - 1) % n];
        let (ci, pi) = (inside(cur), inside(prev));
        if ci {
            if !pi {
                out.push(intersect_with_line(prev, cur, line));
            }
            out.push(cur);
        } else if pi {
            out.push(intersect_with_line(prev, cur, line));
        }
    }
    out
}

fn intersect_with_line(a: Point, b: Point, line: &Line) -> Point {
    let sa = line.side(a);
    let sb = line.side(b);
    let t = sa / (sa - sb);
    a.lerp(b, t)
}

/// x-coordinate where edge `a -> b` crosses the horizontal `y`, if the edge
/// spans it under the half-open rule `min(a.y,b.y) <= y < max(a.y,b.y)`.
/// Shared by rasterisation and point containment so the two agree exactly.
#[inline]
pub(crate) fn edge_crossing_x(a: Point, b: Point, y: f64) -> Option<f64> {
    if (a.y <= y && y < b.y) || (b.y <= y && y < a.y) {
        Some(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
    } else {
        None
    }
}

/// Even-odd containment test.
pub fn contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        if let Some(x) = edge_crossing_x(poly[i], poly[(i + 1) % n], p.y) {
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Parameter intervals `[t0, t1] ⊂ [0, 1]` of segment `a -> b` that lie
/// inside `poly`.
pub fn segment_inside_intervals(poly: &[Point], a: Point, b: Point) -> Vec<(f64, f64)> {
    let n = poly.len();
    let d = b - a;
    let mut ts = vec![0.0, 1.0];
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let e = q - p;
        let denom = d.cross(e);
        if denom.abs() < 1e-12 {
            continue;
        }
        let w = p - a;
        let t = w.cross(e) / denom;
        let u = w.cross(d) / denom;
        if (0.0..=1.0).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 < 1e-12 {
            continue;
        }
        if contains(poly, a.lerp(b, 0.5 * (t0 + t1))) {
            match out.last_mut() {
                Some(last) if (last.1 - t0).abs() < 1e-12 => last.1 = t1,
                _ => out.push((t0, t1)),
            }
        }
    }
    out
}

/// Removes every interval in `cut` from the sorted, disjoint `base`.
pub fn subtract_intervals(base: &[(f64, f64)], cut: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = base.to_vec();
    for &(c0, c1) in cut {
        let mut next = Vec::with_capacity(out.len() + 1);
        for (b0, b1) in out {
            if c1 <= b0 || c0 >= b1 {
                next.push((b0, b1));
                continue;
            }
            if c0 > b0 {
                next.push((b0, c0));
            }
            if c1 < b1 {
                next.push((c1, b1));
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ]
    }

    #[test]
    fn reflection_matches_line_reflect() {
        let line = Line::through(Point::new(1.0, 2.0), Point::new(4.0, 7.0)).unwrap();
        let iso = Isometry::reflection(&line);
        for p in [Point::new(0.0, 0.0), Point::new(-3.5, 9.0), Point::new(12.0, 1.0)] {
            let a = iso.apply(p);
            let b = line.reflect(p);
            assert!(a.distance(b) < 1e-9);
            assert!(iso.apply(a).distance(p) < 1e-9);
        }
        assert!(iso.is_mirror());
    }

    #[test]
    fn inverse_and_compose() {
        let a = Isometry::translation(Point::new(3.0, -2.0)).then_after(&Isometry::rotation(0.7));
        let b = a.then_after(&a.inverse());
        let p = Point::new(5.0, 11.0);
        assert!(b.apply(p).distance(p) < 1e-9);
    }

    #[test]
    fn clip_square_in_half() {
        let line = Line::new(Point::new(5.0, 0.0), Point::new(0.0, 1.0)).unwrap();
        // direction +y: the positive side is -x
        let left = clip_half_plane(&square(), &line, true);
        let right = clip_half_plane(&square(), &line, false);
        assert!((area(&left) - 50.0).abs() < 1e-9);
        assert!((area(&right) - 50.0).abs() < 1e-9);
        assert!(left.iter().all(|p| p.x <= 5.0 + 1e-9));
    }

    #[test]
    fn clip_concave_keeps_area() {
        // U shape cut horizontally through both prongs
        let u = vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 6.0),
            Point::new(7.0, 6.0),
            Point::new(7.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ];
        let line = Line::new(Point::new(0.0, 3.0), Point::new(1.0, 0.0)).unwrap();
        let a = clip_half_plane(&u, &line, true);
        let b = clip_half_plane(&u, &line, false);
        assert!((area(&a) + area(&b) - area(&u)).abs() < 1e-9);
        // the upper part is two disjoint prongs joined by a bridge
        assert!(contains(&b, Point::new(1.0, 1.0)));
        assert!(!contains(&b, Point::new(5.0, 1.0)));
        assert!(contains(&b, Point::new(9.0, 1.0)));
    }

    #[test]
    fn segment_intervals_through_square() {
        let iv = segment_inside_intervals(&square(), Point::new(-5.0, 5.0), Point::new(15.0, 5.0));
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 - 0.25).abs() < 1e-12 && (iv[0].1 - 0.75).abs() < 1e-12);
        let sub = subtract_intervals(&iv, &[(0.4, 0.5)]);
        assert_eq!(sub, vec![(0.25, 0.4), (0.5, 0.75)]);
    }

    #[test]
    fn centroid_of_square() {
        let c = centroid(&square());
        assert!(c.distance(Point::new(5.0, 5.0)) < 1e-9);
    }
}
