//! Shortest paths in the complement of an obstacle set: exact visibility-graph
//! search, an any-angle grid oracle for cross-checking, and the constructive
//! perimeter-detour procedure.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fractal::{FractalSpec, ObstacleSet};
use crate::geometry::{
    seg_intersects_rect, seg_rect_clip_closed, seg_rect_quick, AxisRect, Point, Polyline, RectF,
    RectMode, Segment, Vec2,
};
use crate::rat::{rat, to_f64, Rat};

/// A computed obstacle-avoiding path together with its removability gap.
#[derive(Debug, Clone)]
pub struct PathResult {
    pub path: Polyline,
    pub length: f64,
    pub straight_distance: f64,
    /// length - straight_distance; zero exactly when the straight segment is valid.
    pub gap: f64,
}

impl PathResult {
    fn new(path: Polyline) -> Self {
        let length = path.length();
        let straight_distance = path.first().dist(path.last());
        PathResult { gap: length - straight_distance, length, straight_distance, path }
    }

    /// Exact re-check of the path contract: endpoints match and no edge
    /// crosses an open obstacle interior.
    pub fn validate(&self, a: &Point, b: &Point, obs: &ObstacleSet) -> Result<()> {
        if self.path.first() != a || self.path.last() != b {
            return Err(Error::InvalidInput("path endpoints do not match the query".into()));
        }
        let rects = obs.rects()?;
        for edge in self.path.edges() {
            for r in rects {
                if seg_intersects_rect(&edge, r, RectMode::OpenInterior) {
                    return Err(Error::InvalidInput("path edge crosses an obstacle".into()));
                }
            }
        }
        Ok(())
    }
}

/// Uniform-grid spatial index over rectangle bounds for segment queries.
///
/// Queries are conservative: every rectangle within the float-filter margin
/// of the query segment is reported.
pub struct RectIndex {
    x0: f64,
    y0: f64,
    inv_cw: f64,
    inv_ch: f64,
    nx: i64,
    ny: i64,
    cells: Vec<Vec<u32>>,
    bounds: Vec<RectF>,
}

impl RectIndex {
    pub fn build(rects: &[AxisRect]) -> Self {
        let bounds: Vec<RectF> = rects.iter().map(AxisRect::to_f64_outer).collect();
        if bounds.is_empty() {
            return RectIndex {
                x0: 0.0,
                y0: 0.0,
                inv_cw: 1.0,
                inv_ch: 1.0,
                nx: 1,
                ny: 1,
                cells: vec![Vec::new()],
                bounds,
            };
        }
        let mut x0 = f64::INFINITY;
        let mut y0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for b in &bounds {
            x0 = x0.min(b.x0);
            y0 = y0.min(b.y0);
            x1 = x1.max(b.x1);
            y1 = y1.max(b.y1);
        }
        let pad = 1e-6 + 1e-9 * (x1 - x0).max(y1 - y0).max(1.0);
        x0 -= pad;
        y0 -= pad;
        x1 += pad;
        y1 += pad;
        let side = ((bounds.len() as f64).sqrt().ceil() as i64).clamp(1, 256);
        let nx = side;
        let ny = side;
        let cw = (x1 - x0) / nx as f64;
        let ch = (y1 - y0) / ny as f64;
        let mut cells = vec![Vec::new(); (nx * ny) as usize];
        for (id, b) in bounds.iter().enumerate() {
            let ix0 = (((b.x0 - x0) / cw).floor() as i64).clamp(0, nx - 1);
            let ix1 = (((b.x1 - x0) / cw).floor() as i64).clamp(0, nx - 1);
            let iy0 = (((b.y0 - y0) / ch).floor() as i64).clamp(0, ny - 1);
            let iy1 = (((b.y1 - y0) / ch).floor() as i64).clamp(0, ny - 1);
            for ix in ix0..=ix1 {
                for iy in iy0..=iy1 {
                    cells[(iy * nx + ix) as usize].push(id as u32);
                }
            }
        }
        RectIndex { x0, y0, inv_cw: 1.0 / cw, inv_ch: 1.0 / ch, nx, ny, cells, bounds }
    }

    pub fn bounds(&self) -> &[RectF] {
        &self.bounds
    }

    fn cell_of(&self, p: Vec2) -> (i64, i64) {
        (
            (((p.x - self.x0) * self.inv_cw).floor() as i64).clamp(-1, self.nx),
            (((p.y - self.y0) * self.inv_ch).floor() as i64).clamp(-1, self.ny),
        )
    }

    /// Collects ids of rectangles near the segment, deduplicated, including a
    /// one-cell ring around every traversed cell.
    pub fn candidates(&self, p: Vec2, q: Vec2, out: &mut Vec<u32>, seen: &mut Vec<bool>) {
        out.clear();
        if seen.len() != self.bounds.len() {
            *seen = vec![false; self.bounds.len()];
        }
        let (mut cx, mut cy) = self.cell_of(p);
        let (tx, ty) = self.cell_of(q);
        let dx = q.x - p.x;
        let dy = q.y - p.y;
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        let cw = 1.0 / self.inv_cw;
        let ch = 1.0 / self.inv_ch;
        let mut t_max_x = if dx != 0.0 {
            let edge = self.x0 + (cx + if step_x > 0 { 1 } else { 0 }) as f64 * cw;
            (edge - p.x) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy != 0.0 {
            let edge = self.y0 + (cy + if step_y > 0 { 1 } else { 0 }) as f64 * ch;
            (edge - p.y) / dy
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dx != 0.0 { (cw / dx).abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { (ch / dy).abs() } else { f64::INFINITY };
        let mut guard = 0;
        let max_steps = 2 * (self.nx + self.ny) + 8;
        loop {
            self.push_ring(cx, cy, out, seen);
            if (cx == tx && cy == ty) || guard > max_steps {
                break;
            }
            guard += 1;
            if t_max_x < t_max_y {
                t_max_x += t_delta_x;
                cx += step_x;
            } else {
                t_max_y += t_delta_y;
                cy += step_y;
            }
        }
        for &id in out.iter() {
            seen[id as usize] = false;
        }
    }

    fn push_ring(&self, cx: i64, cy: i64, out: &mut Vec<u32>, seen: &mut [bool]) {
        for ix in (cx - 1).max(0)..=(cx + 1).min(self.nx - 1) {
            for iy in (cy - 1).max(0)..=(cy + 1).min(self.ny - 1) {
                for &id in &self.cells[(iy * self.nx + ix) as usize] {
                    if !seen[id as usize] {
                        seen[id as usize] = true;
                        out.push(id);
                    }
                }
            }
        }
    }
}

/// Visibility structure over obstacle corners plus the two query endpoints.
///
/// Edges are decided exactly (float filter with rational fallback); they are
/// evaluated on demand rather than materialized, so large corner sets stay
/// affordable.
pub struct VisibilityGraph<'a> {
    pub nodes: Vec<Point>,
    nodes_f: Vec<Vec2>,
    rects: &'a [AxisRect],
    index: RectIndex,
}

impl<'a> VisibilityGraph<'a> {
    pub fn build(a: &Point, b: &Point, obs: &'a ObstacleSet) -> Result<Self> {
        let rects = obs.rects()?;
        for (i, endpoint) in [a, b].into_iter().enumerate() {
            if rects.iter().any(|r| r.contains(endpoint, RectMode::OpenInterior)) {
                let name = if i == 0 { "a" } else { "b" };
                return Err(Error::InvalidEndpoint(name.into()));
            }
        }
        let mut nodes = Vec::with_capacity(rects.len() * 4 + 2);
        nodes.push(a.clone());
        nodes.push(b.clone());
        for r in rects {
            nodes.extend(r.corners());
        }
        let nodes_f = nodes.iter().map(Point::to_f64).collect();
        Ok(VisibilityGraph { nodes, nodes_f, rects, index: RectIndex::build(rects) })
    }

    /// Exact edge predicate: true iff the segment between the nodes meets no
    /// open obstacle interior.
    pub fn visible(&self, u: usize, v: usize, scratch: &mut QueryScratch) -> bool {
        let p = &self.nodes[u];
        let q = &self.nodes[v];
        if p == q {
            return true;
        }
        !segment_blocked(
            p,
            q,
            self.nodes_f[u],
            self.nodes_f[v],
            self.rects,
            &self.index,
            scratch,
        )
    }

    fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Reusable buffers for repeated visibility queries.
#[derive(Default)]
pub struct QueryScratch {
    candidates: Vec<u32>,
    seen: Vec<bool>,
}

pub(crate) fn segment_blocked(
    p: &Point,
    q: &Point,
    pf: Vec2,
    qf: Vec2,
    rects: &[AxisRect],
    index: &RectIndex,
    scratch: &mut QueryScratch,
) -> bool {
    index.candidates(pf, qf, &mut scratch.candidates, &mut scratch.seen);
    let mut exact_seg: Option<Segment> = None;
    for &id in &scratch.candidates {
        match seg_rect_quick(pf, qf, &index.bounds()[id as usize]) {
            Some(true) => return true,
            Some(false) => {}
            None => {
                let seg = exact_seg.get_or_insert_with(|| {
                    Segment::new(p.clone(), q.clone()).expect("distinct nodes")
                });
                if seg_intersects_rect(seg, &rects[id as usize], RectMode::OpenInterior) {
                    return true;
                }
            }
        }
    }
    false
}

#[derive(PartialEq)]
struct HeapEntry {
    priority: f64,
    tie: u64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap: reversed priority, then deterministic tie keys.
        other
            .priority
            .total_cmp(&self.priority)
            .then(other.tie.cmp(&self.tie))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact Euclidean shortest path via the visibility graph.
///
/// The combinatorial route is exact (visibility decided on rationals); edge
/// weights and the reported length are floats. Ties between equal-length
/// routes resolve to the first-found route under ascending node order.
pub fn esp_visibility(a: &Point, b: &Point, obs: &ObstacleSet) -> Result<PathResult> {
    if a == b {
        return Err(Error::InvalidInput("esp endpoints must be distinct".into()));
    }
    let graph = VisibilityGraph::build(a, b, obs)?;
    let n = graph.node_count();
    let target_f = graph.nodes_f[1];
    let heuristic = |i: usize| graph.nodes_f[i].sub(target_f).norm();

    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut scratch = QueryScratch::default();
    dist[0] = 0.0;
    loop {
        // A* selection: settle the open node minimizing dist + straight-line
        // remainder (consistent heuristic, so settled nodes are final).
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if !done[i] && dist[i] < f64::INFINITY {
                let f = dist[i] + heuristic(i);
                if f < best {
                    best = f;
                    u = i;
                }
            }
        }
        if u == usize::MAX {
            return Err(Error::Unreachable);
        }
        if u == 1 {
            break;
        }
        done[u] = true;
        for v in 0..n {
            if done[v] {
                continue;
            }
            let w = graph.nodes_f[u].sub(graph.nodes_f[v]).norm();
            if dist[u] + w >= dist[v] {
                continue;
            }
            if graph.visible(u, v, &mut scratch) {
                dist[v] = dist[u] + w;
                prev[v] = u;
            }
        }
    }

    let mut order = vec![1usize];
    let mut cur = 1usize;
    while cur != 0 {
        cur = prev[cur];
        order.push(cur);
    }
    order.reverse();
    let mut vertices: Vec<Point> = Vec::with_capacity(order.len());
    for i in order {
        let p = graph.nodes[i].clone();
        if vertices.last() != Some(&p) {
            vertices.push(p);
        }
    }
    Ok(PathResult::new(Polyline::new(vertices)?))
}

/// Any-angle grid search (Theta*-style parent shortcutting) with exact
/// line-of-sight checks. Returns a valid path whose length upper-bounds the
/// exact shortest path; the seed only affects tie-breaking.
pub fn esp_grid_oracle(
    a: &Point,
    b: &Point,
    obs: &ObstacleSet,
    resolution: &Rat,
    seed: u64,
) -> Result<PathResult> {
    if a == b {
        return Err(Error::InvalidInput("oracle endpoints must be distinct".into()));
    }
    if *resolution <= Rat::zero() {
        return Err(Error::Domain("oracle resolution must be positive".into()));
    }
    let rects = obs.rects()?;
    for (name, endpoint) in [("a", a), ("b", b)] {
        if rects.iter().any(|r| r.contains(endpoint, RectMode::OpenInterior)) {
            return Err(Error::InvalidEndpoint(name.into()));
        }
    }

    // Grid anchored at a, covering the scene bbox with a two-cell margin.
    let mut lo_x = a.x.clone().min(b.x.clone());
    let mut hi_x = a.x.clone().max(b.x.clone());
    let mut lo_y = a.y.clone().min(b.y.clone());
    let mut hi_y = a.y.clone().max(b.y.clone());
    for r in rects {
        lo_x = lo_x.min(r.x0.clone());
        hi_x = hi_x.max(r.x1.clone());
        lo_y = lo_y.min(r.y0.clone());
        hi_y = hi_y.max(r.y1.clone());
    }
    let margin = resolution * rat(2, 1);
    let i_min = ((&lo_x - &margin - &a.x) / resolution).floor().to_integer();
    let i_max = ((&hi_x + &margin - &a.x) / resolution).ceil().to_integer();
    let j_min = ((&lo_y - &margin - &a.y) / resolution).floor().to_integer();
    let j_max = ((&hi_y + &margin - &a.y) / resolution).ceil().to_integer();
    let cols = i64::try_from(&i_max - &i_min).map_err(|_| Error::Domain("grid too large".into()))? + 1;
    let rows = i64::try_from(&j_max - &j_min).map_err(|_| Error::Domain("grid too large".into()))? + 1;
    if cols * rows > 4_000_000 {
        return Err(Error::Domain(format!("grid of {cols}x{rows} nodes is too large")));
    }

    let node_point = |i: i64, j: i64| -> Point {
        Point::new(
            &a.x + Rat::from_integer(i_min.clone() + i) * resolution,
            &a.y + Rat::from_integer(j_min.clone() + j) * resolution,
        )
    };
    let cols_u = cols as usize;
    let rows_u = rows as usize;
    let n_grid = cols_u * rows_u;
    let idx_of = |i: i64, j: i64| (j as usize) * cols_u + i as usize;
    // a sits on the grid by construction; b is appended as an extra node.
    let a_i = i64::try_from(-i_min.clone()).unwrap();
    let a_j = i64::try_from(-j_min.clone()).unwrap();
    let a_idx = idx_of(a_i, a_j);
    let b_idx = n_grid;
    let n_nodes = n_grid + 1;

    let res_f = to_f64(resolution);
    let af = a.to_f64();
    let bf = b.to_f64();
    let point_of = |idx: usize| -> Point {
        if idx == b_idx {
            b.clone()
        } else {
            node_point((idx % cols_u) as i64, (idx / cols_u) as i64)
        }
    };
    let coord_of = |idx: usize| -> Vec2 {
        if idx == b_idx {
            bf
        } else {
            let i = (idx % cols_u) as i64;
            let j = (idx / cols_u) as i64;
            Vec2::new(
                af.x + (i_min.clone() + i).to_f64().unwrap() * res_f,
                af.y + (j_min.clone() + j).to_f64().unwrap() * res_f,
            )
        }
    };

    let index = RectIndex::build(rects);
    let mut scratch = QueryScratch::default();
    let mut sight = |u: usize, v: usize, pts: &mut Vec<Option<Point>>| -> bool {
        let pu = pts[u].get_or_insert_with(|| point_of(u)).clone();
        let pv = pts[v].get_or_insert_with(|| point_of(v)).clone();
        if pu == pv {
            return true;
        }
        !segment_blocked(&pu, &pv, coord_of(u), coord_of(v), rects, &index, &mut scratch)
    };

    // b's grid neighbors: the 5x5 block of nodes around it.
    let b_cell_i = ((&b.x - &a.x) / resolution - Rat::from_integer(i_min.clone())).floor().to_integer();
    let b_cell_j = ((&b.y - &a.y) / resolution - Rat::from_integer(j_min.clone())).floor().to_integer();
    let b_ci = i64::try_from(b_cell_i).unwrap_or(0).clamp(0, cols - 1);
    let b_cj = i64::try_from(b_cell_j).unwrap_or(0).clamp(0, rows - 1);

    let mut g = vec![f64::INFINITY; n_nodes];
    let mut parent = vec![usize::MAX; n_nodes];
    let mut closed = vec![false; n_nodes];
    let mut points: Vec<Option<Point>> = vec![None; n_nodes];
    let mut heap = BinaryHeap::new();
    let tie = |node: usize| -> u64 {
        // Seeded deterministic tie key.
        let mut h = seed ^ (node as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^ (h >> 33)
    };
    g[a_idx] = 0.0;
    parent[a_idx] = a_idx;
    heap.push(HeapEntry { priority: coord_of(a_idx).sub(bf).norm(), tie: tie(a_idx), node: a_idx });

    let mut neighbors = Vec::with_capacity(32);
    while let Some(HeapEntry { node: u, .. }) = heap.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        if u == b_idx {
            break;
        }
        neighbors.clear();
        if u == b_idx {
            unreachable!();
        }
        let ui = (u % cols_u) as i64;
        let uj = (u / cols_u) as i64;
        for di in -1..=1i64 {
            for dj in -1..=1i64 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (ui + di, uj + dj);
                if ni >= 0 && ni < cols && nj >= 0 && nj < rows {
                    neighbors.push(idx_of(ni, nj));
                }
            }
        }
        if (ui - b_ci).abs() <= 2 && (uj - b_cj).abs() <= 2 {
            neighbors.push(b_idx);
        }
        let uf = coord_of(u);
        for &v in &neighbors {
            if closed[v] {
                continue;
            }
            let vf = coord_of(v);
            // Theta*: try the shortcut from u's parent first.
            let pu = parent[u];
            let (cand_parent, cand_g) = if pu != usize::MAX && sight(pu, v, &mut points) {
                (pu, g[pu] + coord_of(pu).sub(vf).norm())
            } else if sight(u, v, &mut points) {
                (u, g[u] + uf.sub(vf).norm())
            } else {
                continue;
            };
            if cand_g + 1e-15 < g[v] {
                g[v] = cand_g;
                parent[v] = cand_parent;
                heap.push(HeapEntry {
                    priority: cand_g + vf.sub(bf).norm(),
                    tie: tie(v),
                    node: v,
                });
            }
        }
    }
    if !closed[b_idx] {
        return Err(Error::Unreachable);
    }
    let mut chain = vec![b_idx];
    let mut cur = b_idx;
    while cur != a_idx {
        cur = parent[cur];
        chain.push(cur);
    }
    chain.reverse();
    let mut vertices: Vec<Point> = Vec::with_capacity(chain.len());
    for idx in chain {
        let p = points[idx].get_or_insert_with(|| point_of(idx)).clone();
        if vertices.last() != Some(&p) {
            vertices.push(p);
        }
    }
    let result = PathResult::new(Polyline::new(vertices)?);
    result.validate(a, b, obs)?;
    Ok(result)
}

/// Output of the perimeter-detour construction.
#[derive(Debug, Clone)]
pub struct DetourOutcome {
    pub result: PathResult,
    /// Number of rectangles spliced around.
    pub spliced: usize,
    /// Sum of perimeters of the intersected rectangles (exact).
    pub intersected_perimeter: Rat,
}

/// Walks the straight segment [a, b]; whenever it enters a rectangle's
/// interior, splices in the shorter of the two boundary arcs between the
/// entry point and the last exit point on that rectangle, then continues.
///
/// The result is valid and its length is at most
/// |a - b| + (sum of intersected perimeters) / 2.
pub fn detour_construct(a: &Point, b: &Point, obs: &ObstacleSet) -> Result<DetourOutcome> {
    if a == b {
        return Err(Error::InvalidInput("detour endpoints must be distinct".into()));
    }
    let rects = obs.rects()?;
    for (name, endpoint) in [("a", a), ("b", b)] {
        if rects.iter().any(|r| r.contains(endpoint, RectMode::OpenInterior)) {
            return Err(Error::InvalidEndpoint(name.into()));
        }
    }
    let seg = Segment::new(a.clone(), b.clone())?;
    // Open-interior crossings of disjoint rectangles give pairwise-disjoint
    // parameter intervals; sort and splice in order.
    let mut crossings: Vec<(usize, Rat, Rat)> = Vec::new();
    for (id, r) in rects.iter().enumerate() {
        if let Some((t0, t1)) = seg_rect_clip_closed(&seg, r) {
            if t0 < t1 {
                let mid = (&t0 + &t1) / Rat::from_integer(2.into());
                if r.contains(&seg.at(&mid), RectMode::OpenInterior) {
                    crossings.push((id, t0, t1));
                }
            }
        }
    }
    crossings.sort_by(|x, y| x.1.cmp(&y.1));

    let mut vertices: Vec<Point> = vec![a.clone()];
    let mut perimeter_sum = Rat::zero();
    let spliced = crossings.len();
    for (id, t0, t1) in crossings {
        let r = &rects[id];
        perimeter_sum += r.perimeter();
        let entry = seg.at(&t0);
        let exit = seg.at(&t1);
        push_dedup(&mut vertices, entry.clone());
        for c in shorter_arc(r, &entry, &exit) {
            push_dedup(&mut vertices, c);
        }
        push_dedup(&mut vertices, exit);
    }
    push_dedup(&mut vertices, b.clone());
    if vertices.len() < 2 {
        return Err(Error::InvalidInput("detour endpoints coincide after splicing".into()));
    }
    Ok(DetourOutcome {
        result: PathResult::new(Polyline::new(vertices)?),
        spliced,
        intersected_perimeter: perimeter_sum,
    })
}

fn push_dedup(vertices: &mut Vec<Point>, p: Point) {
    if vertices.last() != Some(&p) {
        vertices.push(p);
    }
}

/// Position of a boundary point along the counterclockwise perimeter walk
/// starting at (x0, y0).
fn perimeter_position(r: &AxisRect, p: &Point) -> Rat {
    let w = r.width();
    let h = r.height();
    if p.y == r.y0 {
        &p.x - &r.x0
    } else if p.x == r.x1 {
        &w + (&p.y - &r.y0)
    } else if p.y == r.y1 {
        &w + &h + (&r.x1 - &p.x)
    } else {
        debug_assert!(p.x == r.x0);
        &w + &h + &w + (&r.y1 - &p.y)
    }
}

/// Corner sequence of the shorter boundary arc from `entry` to `exit`
/// (exclusive of the arc endpoints). Ties pick the counterclockwise arc.
fn shorter_arc(r: &AxisRect, entry: &Point, exit: &Point) -> Vec<Point> {
    let perim = r.perimeter();
    let corners = r.corners();
    let s = perimeter_position(r, entry);
    let e = perimeter_position(r, exit);
    let ccw_len = if e >= s { &e - &s } else { &perim - &s + &e };
    let half = &perim / Rat::from_integer(2.into());
    let go_ccw = ccw_len <= half;

    // Corner positions along the ccw walk: 0, w, w+h, 2w+h.
    let w = r.width();
    let h = r.height();
    let corner_pos = [Rat::zero(), w.clone(), &w + &h, &w + &h + &w];

    let mut out = Vec::new();
    if go_ccw {
        // Corners strictly inside the ccw interval (s, s + ccw_len).
        let mut t = s.clone();
        let target = &s + &ccw_len;
        loop {
            // Next corner strictly after t in ccw order.
            let mut next: Option<(Rat, usize)> = None;
            for (ci, cp) in corner_pos.iter().enumerate() {
                let mut cand = cp.clone();
                while cand <= t {
                    cand += &perim;
                }
                if next.as_ref().map_or(true, |(best, _)| cand < *best) {
                    next = Some((cand, ci));
                }
            }
            let (cand, ci) = next.unwrap();
            if cand >= target {
                break;
            }
            out.push(corners[ci].clone());
            t = cand;
        }
    } else {
        // Clockwise: corners strictly inside the cw interval from s.
        let cw_len = &perim - &ccw_len;
        let mut t = s.clone();
        let mut remaining = cw_len;
        loop {
            let mut next: Option<(Rat, usize)> = None;
            for (ci, cp) in corner_pos.iter().enumerate() {
                let mut cand = cp.clone();
                while cand >= t {
                    cand -= &perim;
                }
                // distance walked clockwise from s-side position t to cand
                if next.as_ref().map_or(true, |(best, _)| cand > *best) {
                    next = Some((cand, ci));
                }
            }
            let (cand, ci) = next.unwrap();
            let step = &t - &cand;
            if step >= remaining {
                break;
            }
            out.push(corners[ci].clone());
            remaining -= &step;
            t = cand;
        }
    }
    out
}

/// Total boundary length inside the closed ball B(center, radius), as a float.
pub fn boundary_length_in_ball(rects: &[AxisRect], center: Vec2, radius: f64) -> f64 {
    let mut total = 0.0;
    let r2 = radius * radius;
    for r in rects {
        let b = r.to_f64_outer();
        let edges = [
            (b.x0, b.y0, b.x1, b.y0),
            (b.x1, b.y0, b.x1, b.y1),
            (b.x1, b.y1, b.x0, b.y1),
            (b.x0, b.y1, b.x0, b.y0),
        ];
        for (x0, y0, x1, y1) in edges {
            total += segment_len_in_disk(x0, y0, x1, y1, center, r2);
        }
    }
    total
}

fn segment_len_in_disk(x0: f64, y0: f64, x1: f64, y1: f64, c: Vec2, r2: f64) -> f64 {
    // Solve |p(t) - c|^2 <= r^2 for t in [0, 1].
    let dx = x1 - x0;
    let dy = y1 - y0;
    let fx = x0 - c.x;
    let fy = y0 - c.y;
    let aa = dx * dx + dy * dy;
    if aa == 0.0 {
        return 0.0;
    }
    let bb = 2.0 * (fx * dx + fy * dy);
    let cc = fx * fx + fy * fy - r2;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-bb - sq) / (2.0 * aa)).max(0.0);
    let t1 = ((-bb + sq) / (2.0 * aa)).min(1.0);
    if t1 <= t0 {
        return 0.0;
    }
    (t1 - t0) * aa.sqrt()
}

/// One row of a removability sweep: the gap at a stage, next to the
/// length-estimate bound evaluated on the boundary clipped to B(a, L).
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub stage: u32,
    pub rects: usize,
    pub length: f64,
    pub gap: f64,
    /// H^1 of the obstacle boundary clipped to B(a, L), L = |a-b| + (pi/2) H^1.
    pub bound_h1: f64,
    /// (pi/2) * bound_h1; the gap must never exceed this.
    pub lemma_bound: f64,
    /// gap / bound_h1, reported against the conjectured constant 1.
    pub ratio: f64,
}

/// Runs `esp_visibility` across stages of a family and records the gap next
/// to the length-estimate bound.
pub fn removability_sweep(
    stages: &[(u32, FractalSpec)],
    a: &Point,
    b: &Point,
    limit: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(stages.len());
    for (stage, spec) in stages {
        let obs = ObstacleSet::generate(spec, limit)?;
        let res = esp_visibility(a, b, &obs)?;
        let rects = obs.rects()?.len();
        let bound_total = to_f64(obs.boundary_length());
        let ball_radius = res.straight_distance + std::f64::consts::FRAC_PI_2 * bound_total;
        let bound_h1 = boundary_length_in_ball(obs.rects()?, a.to_f64(), ball_radius);
        let lemma_bound = std::f64::consts::FRAC_PI_2 * bound_h1;
        let ratio = if bound_h1 > 0.0 { res.gap / bound_h1 } else { 0.0 };
        rows.push(SweepRow {
            stage: *stage,
            rects,
            length: res.length,
            gap: res.gap,
            bound_h1,
            lemma_bound,
            ratio,
        });
    }
    Ok(rows)
}

/// Seeded random scene: `n` pairwise-disjoint rectangles with dyadic
/// coordinates inside the unit square, and endpoints to its left and right.
pub fn random_scene(n: usize, seed: u64) -> (Point, Point, ObstacleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den: i64 = 1 << 12;
    let mut rects: Vec<AxisRect> = Vec::with_capacity(n);
    let mut attempts = 0;
    while rects.len() < n && attempts < 200 * n.max(1) {
        attempts += 1;
        let cx = rng.gen_range(0..=den);
        let cy = rng.gen_range(0..=den);
        let hw = rng.gen_range(8..=96);
        let hh = rng.gen_range(8..=96);
        let cand = AxisRect::new(
            rat(cx - hw, den),
            rat(cy - hh, den),
            rat(cx + hw, den),
            rat(cy + hh, den),
        )
        .unwrap();
        if rects.iter().all(|r| !r.meets_closed(&cand)) {
            rects.push(cand);
        }
    }
    let ay = rat(rng.gen_range(0..=den), den);
    let by = rat(rng.gen_range(0..=den), den);
    let a = Point::new(rat(-1, 4), ay);
    let b = Point::new(rat(5, 4), by);
    let obs = ObstacleSet::from_rects(rects).expect("construction is disjoint");
    (a, b, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::DEFAULT_RECT_LIMIT;
    use crate::rat::rat_int;

    fn pti(x: i64, y: i64) -> Point {
        Point::new(rat_int(x), rat_int(y))
    }

    fn ptr(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::new(rat(x.0, x.1), rat(y.0, y.1))
    }

    fn unit_square_obs() -> ObstacleSet {
        ObstacleSet::from_rects(vec![AxisRect::new(
            rat_int(0),
            rat_int(0),
            rat_int(1),
            rat_int(1),
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn esp_no_obstacles_is_straight() {
        let obs = ObstacleSet::from_rects(vec![]).unwrap();
        let r = esp_visibility(&pti(0, 0), &pti(3, 4), &obs).unwrap();
        assert_eq!(r.length, 5.0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.path.vertices().len(), 2);
    }

    #[test]
    fn esp_single_square_goes_around_corners() {
        let obs = unit_square_obs();
        let a = ptr((-1, 1), (1, 2));
        let b = ptr((2, 1), (1, 2));
        let r = esp_visibility(&a, &b, &obs).unwrap();
        let expected = 1.0 + 2.0 * 1.25f64.sqrt();
        assert!((r.length - expected).abs() < 1e-12, "len = {}", r.length);
        assert!((expected - 3.23607).abs() < 1e-5);
        r.validate(&a, &b, &obs).unwrap();
        // The route passes the two corners of one horizontal side.
        assert_eq!(r.path.vertices().len(), 4);
    }

    #[test]
    fn esp_rejects_interior_endpoint() {
        let obs = unit_square_obs();
        let inside = ptr((1, 2), (1, 2));
        assert!(matches!(
            esp_visibility(&inside, &pti(2, 2), &obs),
            Err(Error::InvalidEndpoint(_))
        ));
    }

    #[test]
    fn esp_length_at_least_straight_distance() {
        for seed in 0..5u64 {
            let (a, b, obs) = random_scene(30, seed);
            let r = esp_visibility(&a, &b, &obs).unwrap();
            assert!(r.gap >= -1e-9);
            r.validate(&a, &b, &obs).unwrap();
        }
    }

    #[test]
    fn oracle_no_obstacles_is_straight() {
        let obs = ObstacleSet::from_rects(vec![]).unwrap();
        let r = esp_grid_oracle(&pti(0, 0), &pti(3, 4), &obs, &rat(1, 8), 7).unwrap();
        assert!((r.length - 5.0).abs() < 1e-12);
        assert_eq!(r.path.vertices().len(), 2);
    }

    #[test]
    fn oracle_single_square_close_to_exact() {
        let obs = unit_square_obs();
        let a = ptr((-1, 1), (1, 2));
        let b = ptr((2, 1), (1, 2));
        let exact = 1.0 + 2.0 * 1.25f64.sqrt();
        let r = esp_grid_oracle(&a, &b, &obs, &rat(1, 128), 7).unwrap();
        assert!(r.length >= exact - 1e-9);
        assert!(r.length <= exact * 1.015, "oracle = {}", r.length);
    }

    #[test]
    fn detour_no_intersection_is_straight() {
        let obs = unit_square_obs();
        let a = pti(-1, 2);
        let b = pti(2, 2);
        let d = detour_construct(&a, &b, &obs).unwrap();
        assert_eq!(d.spliced, 0);
        assert_eq!(d.result.path.vertices().len(), 2);
    }

    #[test]
    fn detour_single_square_hand_traceable() {
        // Entry (0,1/2), exit (1,1/2); either boundary arc has length 2, so
        // the spliced path has length 3 - 1 + 2 = 4 <= 3 + 4/2.
        let obs = unit_square_obs();
        let a = ptr((-1, 1), (1, 2));
        let b = ptr((2, 1), (1, 2));
        let d = detour_construct(&a, &b, &obs).unwrap();
        assert_eq!(d.spliced, 1);
        assert!((d.result.length - 4.0).abs() < 1e-12, "len = {}", d.result.length);
        d.result.validate(&a, &b, &obs).unwrap();
        let exact = esp_visibility(&a, &b, &obs).unwrap();
        assert!(d.result.length >= exact.length - 1e-9);
        let bound = d.result.straight_distance + to_f64(&d.intersected_perimeter) / 2.0;
        assert!(d.result.length <= bound + 1e-9);
    }

    #[test]
    fn detour_cantor_diagonal_bound() {
        // The diagonal enters exactly the 2^3 diagonal squares of stage 3.
        let spec = FractalSpec::CantorProduct { ratio: rat(1, 3), stage: 3 };
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let a = pti(0, 0);
        let b = pti(1, 1);
        let d = detour_construct(&a, &b, &obs).unwrap();
        assert_eq!(d.spliced, 8);
        let bound = 2f64.sqrt() + 0.5 * (8.0 * 4.0 / 27.0);
        assert!((bound - 2.007).abs() < 1e-3);
        assert!(d.result.length <= bound + 1e-12, "len = {}", d.result.length);
        d.result.validate(&a, &b, &obs).unwrap();
    }

    #[test]
    fn sweep_empty_family_has_zero_gaps() {
        let stages: Vec<(u32, FractalSpec)> =
            (1..=3).map(|s| (s, FractalSpec::CustomRects(vec![]))).collect();
        let rows = removability_sweep(&stages, &pti(0, 0), &pti(1, 1), DEFAULT_RECT_LIMIT).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn boundary_clipping_caps_at_full_perimeter() {
        let r = AxisRect::new(rat_int(0), rat_int(0), rat_int(1), rat_int(1)).unwrap();
        let all = boundary_length_in_ball(&[r.clone()], Vec2::new(0.5, 0.5), 10.0);
        assert!((all - 4.0).abs() < 1e-12);
        let none = boundary_length_in_ball(&[r.clone()], Vec2::new(10.0, 10.0), 1.0);
        assert_eq!(none, 0.0);
        let half = boundary_length_in_ball(&[r], Vec2::new(0.0, 0.5), 0.5);
        assert!(half > 0.9 && half < 1.1, "half = {half}");
    }

    #[test]
    fn shorter_arc_prefers_short_side() {
        let r = AxisRect::new(rat_int(0), rat_int(0), rat_int(4), rat_int(1)).unwrap();
        // Crossing near the left edge: the short way goes around x = 0.
        let entry = Point::new(rat_int(1), rat_int(0));
        let exit = Point::new(rat_int(1), rat_int(1));
        let arc = shorter_arc(&r, &entry, &exit);
        assert_eq!(arc.len(), 2);
        assert!(arc.iter().all(|p| p.x == rat_int(0)));
    }
}
