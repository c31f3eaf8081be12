//! Planar primitives: points, segments, axis-aligned rectangles, polylines,
//! cones, and the predicates the rest of the crate is built on.
//!
//! Intersection predicates are exact on rational coordinates. Hot paths go
//! through a conservative floating-point filter first and fall back to the
//! rational computation only when the filter cannot certify an answer.

use crate::error::{Error, Result};
use crate::rat::{to_f64, Rat};
use num_traits::Zero;

/// A point with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: Rat,
    pub y: Rat,
}

impl Point {
    pub fn new(x: Rat, y: Rat) -> Self {
        Point { x, y }
    }

    pub fn to_f64(&self) -> Vec2 {
        Vec2::new(to_f64(&self.x), to_f64(&self.y))
    }

    /// Exact squared distance to another point.
    pub fn dist2(&self, other: &Point) -> Rat {
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        &dx * &dx + &dy * &dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        let dx = to_f64(&self.x) - to_f64(&other.x);
        let dy = to_f64(&self.y) - to_f64(&other.y);
        dx.hypot(dy)
    }
}

/// A plain f64 vector/point for metric work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Angle between two nonzero vectors, in [0, pi].
pub fn angle_between(u: Vec2, v: Vec2) -> Result<f64> {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("angle_between: zero vector".into()));
    }
    let c = (u.dot(v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(c.acos())
}

/// A line segment with distinct endpoints (unless explicitly degenerate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub p: Point,
    pub q: Point,
    degenerate: bool,
}

impl Segment {
    pub fn new(p: Point, q: Point) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidInput(
                "degenerate segment; use Segment::degenerate for a point".into(),
            ));
        }
        Ok(Segment { p, q, degenerate: false })
    }

    /// A single-point "segment", accepted by the predicates as a point query.
    pub fn degenerate(p: Point) -> Self {
        Segment { p: p.clone(), q: p, degenerate: true }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Exact point at parameter t in [0, 1].
    pub fn at(&self, t: &Rat) -> Point {
        let one = Rat::from_integer(1.into());
        let s = &one - t;
        Point::new(&s * &self.p.x + t * &self.q.x, &s * &self.p.y + t * &self.q.y)
    }

    pub fn len(&self) -> f64 {
        self.p.dist(&self.q)
    }
}

/// Intersection semantics against a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectMode {
    /// Meets the open interior. Boundary contact does not count.
    OpenInterior,
    /// Meets the closed rectangle, boundary included.
    Closed,
}

/// Closed axis-aligned rectangle with positive area.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisRect {
    pub x0: Rat,
    pub y0: Rat,
    pub x1: Rat,
    pub y1: Rat,
}

impl AxisRect {
    pub fn new(x0: Rat, y0: Rat, x1: Rat, y1: Rat) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidInput("AxisRect requires x0 < x1 and y0 < y1".into()));
        }
        Ok(AxisRect { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> Rat {
        &self.x1 - &self.x0
    }

    pub fn height(&self) -> Rat {
        &self.y1 - &self.y0
    }

    pub fn area(&self) -> Rat {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> Rat {
        (self.width() + self.height()) * Rat::from_integer(2.into())
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0.clone(), self.y0.clone()),
            Point::new(self.x1.clone(), self.y0.clone()),
            Point::new(self.x1.clone(), self.y1.clone()),
            Point::new(self.x0.clone(), self.y1.clone()),
        ]
    }

    pub fn contains(&self, p: &Point, mode: RectMode) -> bool {
        match mode {
            RectMode::Closed => {
                p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
            }
            RectMode::OpenInterior => {
                p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
            }
        }
    }

    /// True iff the closed rectangles share at least one point.
    pub fn meets_closed(&self, other: &AxisRect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    /// Outward-rounded f64 bounds, safe for conservative filtering.
    pub fn to_f64_outer(&self) -> RectF {
        RectF {
            x0: to_f64(&self.x0),
            y0: to_f64(&self.y0),
            x1: to_f64(&self.x1),
            y1: to_f64(&self.y1),
        }
    }
}

/// f64 snapshot of a rectangle (rounded to nearest; filter margins absorb it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectF {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// Clips the segment parameter range to the closed rectangle.
///
/// Returns the exact t-interval `[t0, t1] ⊂ [0, 1]` where the segment lies in
/// the closed rectangle, or `None` when they are disjoint.
pub fn seg_rect_clip_closed(s: &Segment, r: &AxisRect) -> Option<(Rat, Rat)> {
    let mut lo = Rat::zero();
    let mut hi = Rat::from_integer(1.into());
    let axes = [
        (&s.p.x, &s.q.x, &r.x0, &r.x1),
        (&s.p.y, &s.q.y, &r.y0, &r.y1),
    ];
    for (p, q, b0, b1) in axes {
        let d = q - p;
        if d.is_zero() {
            if p < b0 || p > b1 {
                return None;
            }
            continue;
        }
        let mut t0 = (b0 - p) / &d;
        let mut t1 = (b1 - p) / &d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > lo {
            lo = t0;
        }
        if t1 < hi {
            hi = t1;
        }
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Exact segment-vs-rectangle intersection predicate.
pub fn seg_intersects_rect(s: &Segment, r: &AxisRect, mode: RectMode) -> bool {
    if s.is_degenerate() {
        return r.contains(&s.p, mode);
    }
    let Some((t0, t1)) = seg_rect_clip_closed(s, r) else {
        return false;
    };
    match mode {
        RectMode::Closed => true,
        RectMode::OpenInterior => {
            if t0 >= t1 {
                return false;
            }
            // A straight chord of a convex region is interior away from its
            // clip endpoints unless it runs along a boundary edge; the clip
            // midpoint distinguishes the two cases exactly.
            let mid = (&t0 + &t1) / Rat::from_integer(2.into());
            r.contains(&s.at(&mid), RectMode::OpenInterior)
        }
    }
}

const FILTER_EPS: f64 = 1e-9;

/// Conservative f64 pre-filter for `seg_intersects_rect`.
///
/// `Some(ans)` is certified for both modes: the answer is returned only when
/// the segment clearly crosses the interior or clearly misses the closed
/// rectangle by more than the filter margin. Near-boundary configurations
/// return `None` and must be resolved exactly.
pub fn seg_rect_quick(p: Vec2, q: Vec2, r: &RectF) -> Option<bool> {
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;
    let axes = [(p.x, q.x, r.x0, r.x1), (p.y, q.y, r.y0, r.y1)];
    for (a, b, b0, b1) in axes {
        let d = b - a;
        if d.abs() < 1e-12 {
            if a < b0 - FILTER_EPS || a > b1 + FILTER_EPS {
                return Some(false);
            }
            if a > b0 + FILTER_EPS && a < b1 - FILTER_EPS {
                continue;
            }
            return None;
        }
        let mut t0 = (b0 - a) / d;
        let mut t1 = (b1 - a) / d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        lo = lo.max(t0);
        hi = hi.min(t1);
    }
    let span = hi - lo;
    if span > FILTER_EPS {
        Some(true)
    } else if span < -FILTER_EPS {
        Some(false)
    } else {
        None
    }
}

/// Rectifiable curve as an ordered vertex list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("polyline needs at least 2 vertices".into()));
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput("consecutive polyline vertices coincide".into()));
            }
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn first(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn last(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices
            .windows(2)
            .map(|w| Segment::new(w[0].clone(), w[1].clone()).expect("distinct by invariant"))
    }
}

/// Chord-angle check for the Lipschitz-graph condition: every vertex chord
/// must make an angle strictly less than `eps` with the endpoint chord.
///
/// For polylines the vertex-pair check is the definition; chords between
/// interior edge points lie in the convex cone spanned by vertex chords.
pub fn chord_cone_check(c: &Polyline, eps: f64) -> Result<bool> {
    let vs = c.vertices();
    if vs.first() == vs.last() {
        return Err(Error::InvalidInput("chord_cone_check: first vertex equals last".into()));
    }
    let axis = vs.last().unwrap().to_f64().sub(vs[0].to_f64());
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let chord = vs[j].to_f64().sub(vs[i].to_f64());
            if chord.norm() == 0.0 {
                continue; // non-consecutive vertices may coincide (loops)
            }
            if angle_between(chord, axis)? >= eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Closed cone with apex `p`, axis `v`, and half-angle `theta` in (0, pi/2).
#[derive(Debug, Clone, Copy)]
pub struct Cone {
    pub apex: Vec2,
    pub axis: Vec2,
    pub half_angle: f64,
}

impl Cone {
    pub fn new(apex: Vec2, axis: Vec2, half_angle: f64) -> Result<Self> {
        if axis.norm() == 0.0 {
            return Err(Error::Domain("cone axis must be nonzero".into()));
        }
        if !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Domain("cone half-angle must lie in (0, pi/2)".into()));
        }
        Ok(Cone { apex, axis, half_angle })
    }

    /// Closed-cone membership: <x-p, v> >= cos(theta) |x-p| |v|.
    pub fn contains(&self, x: Vec2) -> bool {
        let w = x.sub(self.apex);
        let n = w.norm();
        if n == 0.0 {
            return true;
        }
        w.dot(self.axis) >= self.half_angle.cos() * n * self.axis.norm() - 1e-15
    }
}
