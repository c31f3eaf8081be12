//! Thinness probes: interval-thinness witness search, the grid example's
//! blocking certificate and line sweep, exact cone-constrained reachability,
//! and the ball-chain construction with its angle quality.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fractal::{FractalSpec, ObstacleSet};
use crate::geometry::{angle_between, Point, Polyline, RectMode, Segment, Vec2};
use crate::path::{QueryScratch, RectIndex};
use crate::rat::{rat, rat_int, to_f64, Rat};

/// Result of a randomized interval-thinness witness search.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    /// A segment between the two balls that misses the set, if one was found.
    pub witness: Option<Segment>,
    /// Number of candidate segments drawn.
    pub samples: u64,
    pub seed: u64,
}

/// Draws segments with endpoints uniform in B(a, eps) x B(b, eps) and returns
/// the first one disjoint from the set. Absence of a witness is a report, not
/// a proof; a found witness is exact (rational endpoints, exact hit test).
pub fn segment_witness(
    a: &Point,
    b: &Point,
    eps: &Rat,
    obs: &ObstacleSet,
    samples: u64,
    seed: u64,
) -> Result<WitnessReport> {
    if *eps <= Rat::zero() {
        return Err(Error::Domain("witness ball radius must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps2 = eps * eps;
    // Dyadic offsets, rejection-sampled into the closed disk (exact check).
    let mut draw_in_ball = |c: &Point| -> Point {
        loop {
            let u = eps * (rat(rng.gen_range(0..=1 << 20), 1 << 19) - rat_int(1));
            let v = eps * (rat(rng.gen_range(0..=1 << 20), 1 << 19) - rat_int(1));
            if &u * &u + &v * &v <= eps2 {
                return Point::new(&c.x + u, &c.y + v);
            }
        }
    };
    let mut drawn = 0;
    while drawn < samples {
        let p = draw_in_ball(a);
        let q = draw_in_ball(b);
        if p == q {
            continue;
        }
        drawn += 1;
        let seg = Segment::new(p, q)?;
        if !obs.segment_hits(&seg) {
            return Ok(WitnessReport { witness: Some(seg), samples: drawn, seed });
        }
    }
    Ok(WitnessReport { witness: None, samples: drawn, seed })
}

/// Exact certificate that the grid family blocks every shallow segment: the
/// two incompatible bounds on the same coordinate differ by at most
/// 9*delta + 3*delta of the cell pitch while the offsets they pin down are
/// half a pitch apart, so the construction works iff 12*delta < 1/2.
pub fn claim1_certificate(delta: &Rat) -> Result<bool> {
    if *delta <= Rat::zero() || *delta >= rat(1, 2) {
        return Err(Error::Domain("delta must lie in (0, 1/2)".into()));
    }
    Ok(rat_int(12) * delta < rat(1, 2))
}

/// Outcome of the seeded blocking-line sweep.
#[derive(Debug, Clone)]
pub struct Claim1Lines {
    pub all_hit: bool,
    pub tested: u64,
    pub counterexample: Option<Segment>,
    /// Set when the spec's min level is below the certificate's range.
    pub shallow_levels: bool,
    pub seed: u64,
}

/// Samples rational lines through {0} x [2d, 1-2d] with |slope| <= 1, clips
/// each to x in [-1, 2], and tests the implicit hit predicate exactly.
pub fn claim1_sample_lines(
    spec: &FractalSpec,
    count: u64,
    seed: u64,
    limit: u64,
) -> Result<Claim1Lines> {
    let (min_level, delta) = match spec {
        FractalSpec::TaborGrid { min_level, delta, .. } => (*min_level, delta.clone()),
        _ => return Err(Error::InvalidInput("blocking-line sweep needs a grid spec".into())),
    };
    spec.validate()?;
    let obs = ObstacleSet::auto(spec, limit)?;
    let shallow_levels = min_level < 7;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = rat_int(1) - rat_int(4) * &delta;
    if span <= Rat::zero() {
        return Err(Error::Domain("delta too large: empty intercept range".into()));
    }
    let mut counterexample = None;
    let mut tested = 0;
    for _ in 0..count {
        let t = rat(rng.gen_range(0..=1 << 20), 1 << 20);
        let y0 = rat_int(2) * &delta + &span * t;
        let slope = rat(rng.gen_range(0..=1 << 20), 1 << 19) - rat_int(1);
        let p = Point::new(rat_int(-1), &y0 - &slope);
        let q = Point::new(rat_int(2), &y0 + rat_int(2) * &slope);
        let seg = Segment::new(p, q)?;
        tested += 1;
        if !obs.segment_hits(&seg) {
            counterexample = Some(seg);
            break;
        }
    }
    Ok(Claim1Lines { all_hit: counterexample.is_none(), tested, counterexample, shallow_levels, seed })
}

/// Outcome of the cone-constrained reachability decision.
#[derive(Debug, Clone)]
pub struct ConeReachOutcome {
    pub feasible: bool,
    /// A feasible polyline when one exists; bends only at obstacle corners.
    pub polyline: Option<Polyline>,
    /// Candidate edges examined during the search.
    pub events: u64,
}

/// Exact decision for a polyline from `a` to `b` whose edge directions stay
/// within angle arctan(slope) of b - a while avoiding open obstacle interiors.
///
/// A feasible path can always be shortcut, chord by chord, into one bending
/// only at obstacle corners (the direction cone is convex, so chords of
/// feasible subpaths stay in the cone), so searching the corner graph in
/// order of progress along b - a decides feasibility. Edges use the closed
/// cone; the strict-inequality reading is recovered by the slack applied in
/// the chord re-check.
pub fn cone_reach_feasible(
    a: &Point,
    b: &Point,
    slope: &Rat,
    obs: &ObstacleSet,
) -> Result<ConeReachOutcome> {
    if a == b {
        return Err(Error::InvalidInput("cone reachability needs distinct endpoints".into()));
    }
    if *slope <= Rat::zero() {
        return Err(Error::Domain("cone slope must be positive".into()));
    }
    let rects = obs.rects()?;
    for (name, endpoint) in [("a", a), ("b", b)] {
        if rects.iter().any(|r| r.contains(endpoint, RectMode::OpenInterior)) {
            return Err(Error::InvalidEndpoint(name.into()));
        }
    }
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    let proj = |p: &Point| -> Rat { (&p.x - &a.x) * &dx + (&p.y - &a.y) * &dy };
    let off = |p: &Point| -> Rat { -((&p.x - &a.x) * &dy) + (&p.y - &a.y) * &dx };

    let mut nodes: Vec<Point> = vec![a.clone(), b.clone()];
    let proj_b = proj(b);
    for r in rects {
        for c in r.corners() {
            let pc = proj(&c);
            // Cone paths advance strictly along b - a, so only corners in the
            // open progress range can appear on one.
            if pc > Rat::zero() && pc < proj_b {
                nodes.push(c);
            }
        }
    }
    let projections: Vec<Rat> = nodes.iter().map(&proj).collect();
    let offsets: Vec<Rat> = nodes.iter().map(&off).collect();
    let nodes_f: Vec<Vec2> = nodes.iter().map(Point::to_f64).collect();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| {
        projections[i]
            .cmp(&projections[j])
            .then_with(|| offsets[i].cmp(&offsets[j]))
            .then(i.cmp(&j))
    });

    let index = RectIndex::build(rects);
    let mut scratch = QueryScratch::default();
    let mut reachable = vec![false; nodes.len()];
    let mut pred = vec![usize::MAX; nodes.len()];
    reachable[0] = true;
    let mut events = 0u64;
    for (pos, &v) in order.iter().enumerate() {
        if reachable[v] {
            continue;
        }
        for &u in &order[..pos] {
            if !reachable[u] {
                continue;
            }
            events += 1;
            let dp = &projections[v] - &projections[u];
            if dp <= Rat::zero() {
                continue;
            }
            if (&offsets[v] - &offsets[u]).abs() > slope * &dp {
                continue;
            }
            if nodes[u] == nodes[v] {
                reachable[v] = true;
                pred[v] = u;
                break;
            }
            let blocked = crate::path::segment_blocked(
                &nodes[u],
                &nodes[v],
                nodes_f[u],
                nodes_f[v],
                rects,
                &index,
                &mut scratch,
            );
            if !blocked {
                reachable[v] = true;
                pred[v] = u;
                break;
            }
        }
    }
    if !reachable[1] {
        return Ok(ConeReachOutcome { feasible: false, polyline: None, events });
    }
    let mut chain = vec![1usize];
    let mut cur = 1usize;
    while cur != 0 {
        cur = pred[cur];
        chain.push(cur);
    }
    chain.reverse();
    let mut vertices: Vec<Point> = Vec::with_capacity(chain.len());
    for i in chain {
        if vertices.last() != Some(&nodes[i]) {
            vertices.push(nodes[i].clone());
        }
    }
    Ok(ConeReachOutcome {
        feasible: true,
        polyline: Some(Polyline::new(vertices)?),
        events,
    })
}

/// One ball of a chain, with its exact normalized position and radius.
#[derive(Debug, Clone)]
pub struct ChainEntry {
    pub k: i32,
    pub center: Point,
    /// Position along [a, b] as a fraction (exact).
    pub t: Rat,
    /// Radius as a fraction of |b - a| (exact).
    pub r_norm: Rat,
    /// Absolute radius.
    pub radius: f64,
}

/// Double-ended ball chain along [a, b]: balls accumulate geometrically at
/// both endpoints with radii shrinking like the square of the position.
#[derive(Debug, Clone)]
pub struct BallChain {
    pub a: Point,
    pub b: Point,
    pub delta: Rat,
    pub entries: Vec<ChainEntry>,
}

/// Builds the chain for k in [-K, K]: in the frame a = 0, |b| = 1 the centers
/// sit at delta^{-k} for k < 0 and 1 - delta^{k+1} for k >= 0, with radii
/// delta^{-2k} and delta^{2k+2} respectively.
pub fn ball_chain(a: &Point, b: &Point, delta: &Rat, big_k: u32) -> Result<BallChain> {
    if a == b {
        return Err(Error::InvalidInput("ball chain needs distinct endpoints".into()));
    }
    if *delta <= Rat::zero() || *delta >= rat(1, 4) {
        return Err(Error::Domain("chain parameter must lie in (0, 1/4)".into()));
    }
    if big_k < 1 {
        return Err(Error::Domain("chain extent must be at least 1".into()));
    }
    let scale = a.dist(b);
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    let mut entries = Vec::with_capacity(2 * big_k as usize + 1);
    for k in -(big_k as i32)..=(big_k as i32) {
        let (t, r_norm) = if k < 0 {
            let e = (-k) as u32;
            (pow(delta, e), pow(delta, 2 * e))
        } else {
            let e = k as u32;
            (rat_int(1) - pow(delta, e + 1), pow(delta, 2 * e + 2))
        };
        let center = Point::new(&a.x + &t * &dx, &a.y + &t * &dy);
        let radius = to_f64(&r_norm) * scale;
        entries.push(ChainEntry { k, center, t, r_norm, radius });
    }
    Ok(BallChain { a: a.clone(), b: b.clone(), delta: delta.clone(), entries })
}

fn pow(r: &Rat, e: u32) -> Rat {
    let mut out = rat_int(1);
    for _ in 0..e {
        out *= r;
    }
    out
}

/// Monte-Carlo angle quality of a chain plus the per-gap analytic bound.
#[derive(Debug, Clone)]
pub struct ChainQuality {
    /// Max over sampled tuples and gaps of the angle against b - a.
    pub max_angle: f64,
    /// Max over gaps of arcsin((r_k + r_{k-1}) / (gap - r_k - r_{k-1})).
    pub analytic_bound: f64,
}

/// Samples one point per ball, `samples` tuples, and measures the worst angle
/// between consecutive steps and the chain axis.
pub fn chain_angle_quality(chain: &BallChain, samples: u64, seed: u64) -> Result<ChainQuality> {
    if chain.entries.len() < 2 {
        return Err(Error::InvalidInput("chain too short".into()));
    }
    let axis = chain.b.to_f64().sub(chain.a.to_f64());
    let centers: Vec<Vec2> = chain.entries.iter().map(|e| e.center.to_f64()).collect();
    let radii: Vec<f64> = chain.entries.iter().map(|e| e.radius).collect();

    let mut analytic: f64 = 0.0;
    for w in 1..centers.len() {
        let gap = centers[w].sub(centers[w - 1]).norm();
        let rsum = radii[w] + radii[w - 1];
        debug_assert!(gap > rsum, "chain balls must be separated");
        let arg = (rsum / (gap - rsum)).min(1.0);
        analytic = analytic.max(arg.asin());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample_in = |c: Vec2, r: f64| -> Vec2 {
        // Uniform in the disk via polar inversion.
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = r * rng.gen_range(0.0f64..1.0).sqrt();
        c.add(Vec2::new(rho * theta.cos(), rho * theta.sin()))
    };
    let mut max_angle: f64 = 0.0;
    for _ in 0..samples {
        let mut prev: Option<Vec2> = None;
        for (c, r) in centers.iter().zip(&radii) {
            let y = sample_in(*c, *r);
            if let Some(p) = prev {
                max_angle = max_angle.max(angle_between(y.sub(p), axis)?);
            }
            prev = Some(y);
        }
    }
    Ok(ChainQuality { max_angle, analytic_bound: analytic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::DEFAULT_RECT_LIMIT;
    use crate::geometry::chord_cone_check;

    fn pt(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::new(rat(x.0, x.1), rat(y.0, y.1))
    }

    #[test]
    fn witness_trivial_on_empty_set() {
        let obs = ObstacleSet::from_rects(vec![]).unwrap();
        let r = segment_witness(
            &pt((0, 1), (0, 1)),
            &pt((1, 1), (0, 1)),
            &rat(1, 4),
            &obs,
            10,
            3,
        )
        .unwrap();
        assert!(r.witness.is_some());
        assert_eq!(r.samples, 1);
    }

    #[test]
    fn witness_exists_left_of_staircase() {
        let spec = FractalSpec::HoleyStaircase { stage: 4 };
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let r = segment_witness(
            &pt((-1, 4), (-1, 4)),
            &pt((-1, 4), (2, 1)),
            &rat(1, 10),
            &obs,
            1000,
            11,
        )
        .unwrap();
        let w = r.witness.expect("vertical corridor left of the set");
        assert!(!obs.segment_hits(&w));
    }

    #[test]
    fn certificate_matches_threshold() {
        assert!(claim1_certificate(&rat(1, 32)).unwrap());
        assert!(!claim1_certificate(&rat(1, 24)).unwrap());
        assert!(!claim1_certificate(&rat(1, 20)).unwrap());
        assert!(claim1_certificate(&rat(0, 1)).is_err());
        assert!(claim1_certificate(&rat(1, 2)).is_err());
        // Antitone: once true, smaller parameters stay true.
        for d in 25..=47 {
            assert!(claim1_certificate(&rat(1, d)).unwrap());
        }
    }

    #[test]
    fn sampled_lines_hit_the_grid() {
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 8, delta: rat(1, 32) };
        let out = claim1_sample_lines(&spec, 50, 7, DEFAULT_RECT_LIMIT).unwrap();
        assert!(out.all_hit, "counterexample: {:?}", out.counterexample);
        assert!(!out.shallow_levels);
        assert_eq!(out.tested, 50);
    }

    #[test]
    fn horizontal_and_slope_one_lines_hit() {
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 8, delta: rat(1, 32) };
        let obs = ObstacleSet::auto(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let horiz =
            Segment::new(Point::new(rat_int(-1), rat(1, 2)), Point::new(rat_int(2), rat(1, 2)))
                .unwrap();
        assert!(obs.segment_hits(&horiz));
        // Slope-one line through (0, 2*delta).
        let diag = Segment::new(
            Point::new(rat_int(-1), rat(1, 16) - rat_int(1)),
            Point::new(rat_int(2), rat(1, 16) + rat_int(2)),
        )
        .unwrap();
        assert!(obs.segment_hits(&diag));
    }

    #[test]
    fn cone_feasible_without_obstacles() {
        let obs = ObstacleSet::from_rects(vec![]).unwrap();
        let out =
            cone_reach_feasible(&pt((0, 1), (0, 1)), &pt((1, 1), (1, 1)), &rat(1, 100), &obs)
                .unwrap();
        assert!(out.feasible);
        assert_eq!(out.polyline.unwrap().vertices().len(), 2);
    }

    #[test]
    fn staircase_blocks_shallow_cone_but_not_wide() {
        let a = pt((0, 1), (1, 3));
        let b = pt((1, 1), (2, 3));
        for stage in 2..=6 {
            let spec = FractalSpec::HoleyStaircase { stage };
            let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
            let shallow = cone_reach_feasible(&a, &b, &rat(31, 100), &obs).unwrap();
            assert!(!shallow.feasible, "stage {stage} should block slope 31/100");
        }
        let spec = FractalSpec::HoleyStaircase { stage: 4 };
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let wide = cone_reach_feasible(&a, &b, &rat_int(1), &obs).unwrap();
        assert!(wide.feasible);
        let poly = wide.polyline.unwrap();
        let eps = 1f64.atan() + 1e-9;
        assert!(chord_cone_check(&poly, eps).unwrap());
        for edge in poly.edges() {
            for r in obs.rects().unwrap() {
                assert!(!crate::geometry::seg_intersects_rect(
                    &edge,
                    r,
                    RectMode::OpenInterior
                ));
            }
        }
    }

    #[test]
    fn cone_feasibility_monotone_in_slope() {
        let a = pt((0, 1), (1, 3));
        let b = pt((1, 1), (2, 3));
        let spec = FractalSpec::HoleyStaircase { stage: 3 };
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let mut prev = false;
        for num in [20i64, 31, 50, 75, 100, 150] {
            let out = cone_reach_feasible(&a, &b, &rat(num, 100), &obs).unwrap();
            assert!(out.feasible || !prev, "feasibility lost when widening to {num}/100");
            prev = out.feasible;
        }
        assert!(prev, "widest cone should be feasible");
    }

    #[test]
    fn full_vertical_strip_blocks_every_slope() {
        // Rounding the wall's end needs slope >= 2.5e6, far above every
        // tested cone.
        let wall = crate::geometry::AxisRect::new(
            rat(2, 5),
            rat_int(-1_000_000),
            rat(3, 5),
            rat_int(1_000_000),
        )
        .unwrap();
        let obs = ObstacleSet::from_rects(vec![wall]).unwrap();
        for num in [1i64, 10, 100, 1000] {
            let out =
                cone_reach_feasible(&pt((0, 1), (0, 1)), &pt((1, 1), (0, 1)), &rat(num, 1), &obs)
                    .unwrap();
            assert!(!out.feasible, "slope {num} should be blocked by the tall wall");
        }
    }

    #[test]
    fn chain_formulas_match_hand_values() {
        let a = Point::new(rat_int(0), rat_int(0));
        let b = Point::new(rat_int(1), rat_int(0));
        let chain = ball_chain(&a, &b, &rat(1, 10), 3).unwrap();
        let at = |k: i32| chain.entries.iter().find(|e| e.k == k).unwrap();
        assert_eq!(at(-1).t, rat(1, 10));
        assert_eq!(at(-1).r_norm, rat(1, 100));
        assert_eq!(at(0).t, rat(9, 10));
        assert_eq!(at(0).r_norm, rat(1, 100));
        // Consecutive center distances: delta^{|k|} - delta^{|k|+1} away from
        // the middle, 1 - 2*delta across it.
        assert_eq!(&at(-1).t - &at(-2).t, rat(1, 10) - rat(1, 100));
        assert_eq!(&at(0).t - &at(-1).t, rat(8, 10));
        assert_eq!(&at(1).t - &at(0).t, rat(1, 10) - rat(1, 100));
        // Innermost center sits exactly delta^K of the way from a.
        assert_eq!(at(-3).t, rat(1, 1000));
        assert_eq!(at(3).t, rat_int(1) - rat(1, 10000));
    }

    #[test]
    fn chain_rejects_bad_parameters() {
        let a = Point::new(rat_int(0), rat_int(0));
        let b = Point::new(rat_int(1), rat_int(0));
        assert!(ball_chain(&a, &b, &rat(1, 4), 2).is_err());
        assert!(ball_chain(&a, &b, &rat(1, 10), 0).is_err());
        assert!(ball_chain(&a, &a, &rat(1, 10), 2).is_err());
    }

    #[test]
    fn chain_angles_bounded_and_monotone_in_delta() {
        let a = Point::new(rat_int(0), rat_int(0));
        let b = Point::new(rat_int(3), rat_int(4));
        let tight = ball_chain(&a, &b, &rat(1, 20), 3).unwrap();
        let loose = ball_chain(&a, &b, &rat(1, 5), 3).unwrap();
        let q_tight = chain_angle_quality(&tight, 1000, 9).unwrap();
        let q_loose = chain_angle_quality(&loose, 1000, 9).unwrap();
        assert!(q_tight.max_angle < q_loose.max_angle);
        assert!(q_tight.max_angle <= q_tight.analytic_bound + 1e-12);
        assert!(q_loose.max_angle <= q_loose.analytic_bound + 1e-12);
        assert!(q_tight.max_angle > 0.0);
    }
}
