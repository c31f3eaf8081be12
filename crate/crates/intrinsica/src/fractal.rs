//! Finite-stage approximations of the fractal obstacle families, with exact
//! measures, perimeters, cover sums, and an implicit lazily-expanded
//! membership test for compositions too large to enumerate.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{seg_intersects_rect, seg_rect_clip_closed, seg_rect_quick, AxisRect, RectF, RectMode, Segment};
use crate::rat::{rat, rat_int, rat_pow2, to_f64, Rat};

/// Default explicit-expansion limit.
pub const DEFAULT_RECT_LIMIT: u64 = 1_000_000;

/// Parametric description of a generator family plus stage/depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FractalSpec {
    /// Product of two linear Cantor sets with child-interval ratio in (0, 1/2).
    CantorProduct { ratio: Rat, stage: u32 },
    /// Product of two Smith-Volterra (fat) Cantor sets. At step k the
    /// construction removes a centered gap of length `2*total_gap*4^-k` from
    /// each of the 2^(k-1) intervals, so the stage-n linear measure is
    /// `1 - total_gap*(1 - 2^-n)`.
    FatCantorProduct { total_gap: Rat, stage: u32 },
    /// Boxes over the stage-n middle-third Cantor intervals spanning the
    /// Cantor staircase function's value range on each interval.
    HoleyStaircase { stage: u32 },
    /// Composition of the three-column grid systems S_minLevel .. S_maxLevel
    /// applied to the unit square.
    TaborGrid { min_level: u32, max_level: u32, delta: Rat },
    /// An explicit user-provided family of pairwise-disjoint closed rectangles.
    CustomRects(Vec<AxisRect>),
}

impl FractalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FractalSpec::CantorProduct { ratio, .. } => {
                if *ratio <= Rat::zero() || *ratio >= rat(1, 2) {
                    return Err(Error::Domain("CantorProduct ratio must be in (0, 1/2)".into()));
                }
            }
            FractalSpec::FatCantorProduct { total_gap, .. } => {
                if *total_gap <= Rat::zero() || *total_gap >= Rat::one() {
                    return Err(Error::Domain("FatCantorProduct totalGap must be in (0, 1)".into()));
                }
            }
            FractalSpec::HoleyStaircase { .. } => {}
            FractalSpec::TaborGrid { min_level, max_level, delta } => {
                if *min_level < 2 {
                    return Err(Error::Domain("TaborGrid minLevel must be >= 2".into()));
                }
                if min_level > max_level {
                    return Err(Error::Domain("TaborGrid minLevel must be <= maxLevel".into()));
                }
                if *delta <= Rat::zero() || *delta >= rat(1, 2) {
                    return Err(Error::Domain("TaborGrid delta must be in (0, 1/2)".into()));
                }
            }
            FractalSpec::CustomRects(_) => {}
        }
        Ok(())
    }

    /// The blocking certificate for sampled lines needs levels starting at 7
    /// and delta < 1/24; shallower grids are fine for path demos but carry no
    /// guarantee.
    pub fn claim1_applicable(&self) -> bool {
        matches!(self, FractalSpec::TaborGrid { min_level, delta, .. }
            if *min_level >= 7 && *delta < rat(1, 24))
    }

    /// Number of rectangles an explicit expansion would produce.
    pub fn rect_count(&self) -> u128 {
        match self {
            FractalSpec::CantorProduct { stage, .. } | FractalSpec::FatCantorProduct { stage, .. } => {
                if *stage >= 64 {
                    u128::MAX
                } else {
                    1u128.checked_shl(2 * stage).unwrap_or(u128::MAX)
                }
            }
            FractalSpec::HoleyStaircase { stage } => {
                1u128.checked_shl(*stage).unwrap_or(u128::MAX)
            }
            FractalSpec::TaborGrid { min_level, max_level, .. } => {
                let mut total: u128 = 1;
                for level in *min_level..=*max_level {
                    let per = if level >= 32 {
                        u128::MAX
                    } else {
                        3u128 * ((1u128 << (2 * level)) - 1)
                    };
                    total = total.saturating_mul(per);
                }
                total
            }
            FractalSpec::CustomRects(rects) => rects.len() as u128,
        }
    }
}

/// Exact stage measures: H^1 of the underlying linear stage set where the
/// family is a product, H^2 of the planar union, H^1 of its boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageMeasures {
    pub linear: Option<Rat>,
    pub planar: Rat,
    pub boundary: Rat,
}

/// Finite family of pairwise-disjoint closed rectangles, explicit or implicit.
#[derive(Debug, Clone)]
pub struct ObstacleSet {
    repr: Repr,
    measures: StageMeasures,
}

#[derive(Debug, Clone)]
enum Repr {
    Explicit(Vec<AxisRect>),
    Implicit(FractalSpec),
}

impl ObstacleSet {
    /// Explicit set from user rectangles; validates pairwise disjointness of
    /// the closed rectangles.
    pub fn from_rects(rects: Vec<AxisRect>) -> Result<Self> {
        check_pairwise_disjoint(&rects)?;
        let planar: Rat = rects.iter().map(AxisRect::area).sum();
        let boundary: Rat = rects.iter().map(AxisRect::perimeter).sum();
        Ok(ObstacleSet {
            repr: Repr::Explicit(rects),
            measures: StageMeasures { linear: None, planar, boundary },
        })
    }

    /// Explicit expansion of a spec, or an error when `limit` is exceeded.
    pub fn generate(spec: &FractalSpec, limit: u64) -> Result<Self> {
        spec.validate()?;
        let needed = spec.rect_count();
        if needed > limit as u128 {
            return Err(Error::ExplicitExpansion { needed, limit });
        }
        let rects = expand_rects(spec)?;
        check_pairwise_disjoint(&rects)?;
        let measures = stage_measures_of(spec, &rects);
        Ok(ObstacleSet { repr: Repr::Explicit(rects), measures })
    }

    /// Explicit when the expansion fits under `limit`, implicit otherwise.
    pub fn auto(spec: &FractalSpec, limit: u64) -> Result<Self> {
        match Self::generate(spec, limit) {
            Ok(set) => Ok(set),
            Err(Error::ExplicitExpansion { .. }) => {
                let measures = implicit_measures(spec);
                Ok(ObstacleSet { repr: Repr::Implicit(spec.clone()), measures })
            }
            Err(e) => Err(e),
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.repr, Repr::Explicit(_))
    }

    pub fn rects(&self) -> Result<&[AxisRect]> {
        match &self.repr {
            Repr::Explicit(r) => Ok(r),
            Repr::Implicit(spec) => Err(Error::ExplicitExpansion {
                needed: spec.rect_count(),
                limit: 0,
            }),
        }
    }

    pub fn spec(&self) -> Option<&FractalSpec> {
        match &self.repr {
            Repr::Implicit(spec) => Some(spec),
            Repr::Explicit(_) => None,
        }
    }

    pub fn measures(&self) -> &StageMeasures {
        &self.measures
    }

    /// H^2 of the union.
    pub fn measure(&self) -> &Rat {
        &self.measures.planar
    }

    /// H^1 of the union's boundary (sum of perimeters; rectangles disjoint).
    pub fn boundary_length(&self) -> &Rat {
        &self.measures.boundary
    }

    /// Stage H^1 of the underlying linear Cantor set for product families.
    pub fn one_dim_measure(&self) -> Option<&Rat> {
        self.measures.linear.as_ref()
    }

    /// Exact: does the segment meet the closed union?
    pub fn segment_hits(&self, s: &Segment) -> bool {
        match &self.repr {
            Repr::Explicit(rects) => {
                let pf = s.p.to_f64();
                let qf = s.q.to_f64();
                rects.iter().any(|r| {
                    match seg_rect_quick(pf, qf, &r.to_f64_outer()) {
                        Some(ans) => ans,
                        None => seg_intersects_rect(s, r, RectMode::Closed),
                    }
                })
            }
            Repr::Implicit(spec) => segment_hits_implicit(spec, s),
        }
    }
}

/// Sweep-line disjointness check; exact, O(n log n) for disjoint inputs.
fn check_pairwise_disjoint(rects: &[AxisRect]) -> Result<()> {
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Kind {
        Start,
        End,
    }
    let mut events: Vec<(Rat, Kind, usize)> = Vec::with_capacity(rects.len() * 2);
    for (i, r) in rects.iter().enumerate() {
        events.push((r.x0.clone(), Kind::Start, i));
        events.push((r.x1.clone(), Kind::End, i));
    }
    // Starts before ends at equal x: closed rects touching in x do intersect
    // when their y-ranges overlap.
    events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut active: BTreeMap<Rat, usize> = BTreeMap::new(); // y0 -> rect id
    let overlap_err = |i: usize, j: usize| {
        Err(Error::InvalidInput(format!(
            "rectangles {i} and {j} are not disjoint as closed sets"
        )))
    };
    for (_, kind, i) in events {
        let r = &rects[i];
        match kind {
            Kind::Start => {
                // Any active rect with y0 in [r.y0, r.y1] overlaps; so does a
                // predecessor whose y1 reaches r.y0.
                if let Some((_, &j)) = active.range(r.y0.clone()..=r.y1.clone()).next() {
                    return overlap_err(i, j);
                }
                if let Some((_, &j)) = active.range(..r.y0.clone()).next_back() {
                    if rects[j].y1 >= r.y0 {
                        return overlap_err(i, j);
                    }
                }
                active.insert(r.y0.clone(), i);
            }
            Kind::End => {
                active.remove(&r.y0);
            }
        }
    }
    Ok(())
}

/// Stage intervals of the ratio-Cantor construction, in left-to-right order.
fn cantor_intervals(ratio: &Rat, stage: u32) -> Vec<(Rat, Rat)> {
    let mut intervals = vec![(Rat::zero(), Rat::one())];
    for _ in 0..stage {
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for (a, b) in intervals {
            let w = &b - &a;
            let child = &w * ratio;
            next.push((a.clone(), &a + &child));
            next.push((&b - &child, b));
        }
        intervals = next;
    }
    intervals
}

/// Smith-Volterra stage intervals: step k removes a centered gap of length
/// `2g*4^-k` from each interval.
fn svc_intervals(total_gap: &Rat, stage: u32) -> Vec<(Rat, Rat)> {
    let mut intervals = vec![(Rat::zero(), Rat::one())];
    for k in 1..=stage {
        let gap = total_gap * rat_int(2) * rat(1, 4).pow(k as i32);
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for (a, b) in intervals {
            let w = &b - &a;
            let child = (&w - &gap) / rat_int(2);
            debug_assert!(child > Rat::zero());
            next.push((a.clone(), &a + &child));
            next.push((&b - &child, b));
        }
        intervals = next;
    }
    intervals
}

fn product_squares(intervals: &[(Rat, Rat)]) -> Vec<AxisRect> {
    let mut rects = Vec::with_capacity(intervals.len() * intervals.len());
    for (x0, x1) in intervals {
        for (y0, y1) in intervals {
            rects.push(AxisRect::new(x0.clone(), y0.clone(), x1.clone(), y1.clone()).unwrap());
        }
    }
    rects
}

fn staircase_boxes(stage: u32) -> Vec<AxisRect> {
    let third = rat(1, 3);
    let intervals = cantor_intervals(&third, stage);
    let h = rat_pow2(-(stage as i32));
    intervals
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let y0 = rat_int(i as i64) * &h;
            let y1 = &y0 + &h;
            AxisRect::new(a, y0, b, y1).unwrap()
        })
        .collect()
}

/// Column x-offset factor within the unit frame: i * 2^-level.
fn tabor_column_x(level: u32, i: u32) -> Rat {
    rat_int(i as i64) * rat_pow2(-(level as i32))
}

/// Row y-offset factor within the unit frame: (k + delta [+ 1/2]) * 2^-2level.
fn tabor_row_y(level: u32, i: u32, k: &BigInt, delta: &Rat) -> Rat {
    let mut off = Rat::from_integer(k.clone()) + delta;
    if i == 2 {
        off += rat(1, 2);
    }
    off * rat_pow2(-(2 * level as i32))
}

fn tabor_side(level: u32, delta: &Rat) -> Rat {
    (Rat::one() - rat_int(2) * delta) * rat_pow2(-(2 * level as i32))
}

fn tabor_expand(
    frame: &AxisRect,
    level: u32,
    max_level: u32,
    delta: &Rat,
    out: &mut Vec<AxisRect>,
) {
    if level > max_level {
        out.push(frame.clone());
        return;
    }
    let fs = frame.width(); // frames are squares
    let side = &fs * tabor_side(level, delta);
    let kmax = (BigInt::one() << (2 * level as usize)) - 2;
    let mut k = BigInt::zero();
    while k <= kmax {
        for i in 0..3u32 {
            let x = &frame.x0 + &fs * tabor_column_x(level, i);
            let y = &frame.y0 + &fs * tabor_row_y(level, i, &k, delta);
            let child =
                AxisRect::new(x.clone(), y.clone(), &x + &side, &y + &side).unwrap();
            tabor_expand(&child, level + 1, max_level, delta, out);
        }
        k += 1;
    }
}

fn expand_rects(spec: &FractalSpec) -> Result<Vec<AxisRect>> {
    Ok(match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            product_squares(&cantor_intervals(ratio, *stage))
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            product_squares(&svc_intervals(total_gap, *stage))
        }
        FractalSpec::HoleyStaircase { stage } => staircase_boxes(*stage),
        FractalSpec::TaborGrid { min_level, max_level, delta } => {
            let unit = AxisRect::new(Rat::zero(), Rat::zero(), Rat::one(), Rat::one()).unwrap();
            let mut out = Vec::new();
            tabor_expand(&unit, *min_level, *max_level, delta, &mut out);
            out
        }
        FractalSpec::CustomRects(rects) => rects.clone(),
    })
}

fn stage_measures_of(spec: &FractalSpec, rects: &[AxisRect]) -> StageMeasures {
    let planar: Rat = rects.iter().map(AxisRect::area).sum();
    let boundary: Rat = rects.iter().map(AxisRect::perimeter).sum();
    StageMeasures { linear: linear_measure(spec), planar, boundary }
}

fn linear_measure(spec: &FractalSpec) -> Option<Rat> {
    match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            Some((rat_int(2) * ratio).pow(*stage as i32))
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            Some(Rat::one() - total_gap * (Rat::one() - rat_pow2(-(*stage as i32))))
        }
        FractalSpec::HoleyStaircase { stage } => Some(rat(2, 3).pow(*stage as i32)),
        FractalSpec::TaborGrid { .. } | FractalSpec::CustomRects(_) => None,
    }
}

fn implicit_measures(spec: &FractalSpec) -> StageMeasures {
    match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            let lin = (rat_int(2) * ratio).pow(*stage as i32);
            let count = Rat::from_integer(BigInt::from(4).pow(*stage));
            let side = ratio.pow(*stage as i32);
            StageMeasures {
                linear: Some(lin.clone()),
                planar: &lin * &lin,
                boundary: count * rat_int(4) * side,
            }
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            let lin = Rat::one() - total_gap * (Rat::one() - rat_pow2(-(*stage as i32)));
            let boundary = rat_int(4) * rat_pow2(*stage as i32) * &lin;
            StageMeasures { linear: Some(lin.clone()), planar: &lin * &lin, boundary }
        }
        FractalSpec::HoleyStaircase { stage } => {
            let n = *stage as i32;
            StageMeasures {
                linear: Some(rat(2, 3).pow(n)),
                planar: rat(1, 3).pow(n),
                boundary: rat_pow2(n + 1) * (rat(1, 3).pow(n) + rat_pow2(-n)),
            }
        }
        FractalSpec::TaborGrid { min_level, max_level, delta } => {
            let mut count = Rat::one();
            let mut side = Rat::one();
            for level in *min_level..=*max_level {
                count *= Rat::from_integer((BigInt::one() << (2 * level as usize)) - 1) * rat_int(3);
                side *= tabor_side(level, delta);
            }
            StageMeasures {
                linear: None,
                planar: &count * &side * &side,
                boundary: &count * rat_int(4) * &side,
            }
        }
        FractalSpec::CustomRects(rects) => StageMeasures {
            linear: None,
            planar: rects.iter().map(AxisRect::area).sum(),
            boundary: rects.iter().map(AxisRect::perimeter).sum(),
        },
    }
}

/// Exact stage measures of a spec without expanding it.
pub fn stage_measures(spec: &FractalSpec) -> Result<StageMeasures> {
    spec.validate()?;
    Ok(implicit_measures(spec))
}

/// Sum of stage-box diameters: the stage Hausdorff cover sum for s = 1.
pub fn cover_sum(spec: &FractalSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            let side = to_f64(&ratio.pow(*stage as i32));
            4f64.powi(*stage as i32) * side * std::f64::consts::SQRT_2
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            let lin = Rat::one() - total_gap * (Rat::one() - rat_pow2(-(*stage as i32)));
            let side = to_f64(&lin) / 2f64.powi(*stage as i32);
            4f64.powi(*stage as i32) * side * std::f64::consts::SQRT_2
        }
        FractalSpec::HoleyStaircase { stage } => {
            let n = *stage as i32;
            let w = 3f64.powi(-n);
            let h = 2f64.powi(-n);
            2f64.powi(n) * (w * w + h * h).sqrt()
        }
        FractalSpec::TaborGrid { .. } | FractalSpec::CustomRects(_) => {
            let m = implicit_measures(spec);
            // All boxes are squares for TaborGrid; for CustomRects fall back
            // to summing diagonals explicitly.
            match spec {
                FractalSpec::CustomRects(rects) => rects
                    .iter()
                    .map(|r| {
                        let w = to_f64(&r.width());
                        let h = to_f64(&r.height());
                        (w * w + h * h).sqrt()
                    })
                    .sum(),
                _ => to_f64(&m.boundary) / 4.0 * std::f64::consts::SQRT_2,
            }
        }
    })
}

/// Implicit exact membership by recursive descent, expanding only children
/// whose bounding box the segment meets.
fn segment_hits_implicit(spec: &FractalSpec, s: &Segment) -> bool {
    let unit = AxisRect::new(Rat::zero(), Rat::zero(), Rat::one(), Rat::one()).unwrap();
    match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            descend_product(s, &unit, *stage, &|w| {
                let c = w * ratio;
                vec![(Rat::zero(), c.clone()), (w - &c, c)]
            })
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            // Interval lengths are uniform per step; precompute them.
            let mut lens = vec![Rat::one()];
            for k in 1..=*stage {
                let gap = total_gap * rat_int(2) * rat(1, 4).pow(k as i32);
                let prev = lens.last().unwrap().clone();
                lens.push((prev - gap) / rat_int(2));
            }
            descend_fat(s, &unit, 0, *stage, &lens)
        }
        FractalSpec::HoleyStaircase { stage } => descend_staircase(s, &unit, *stage),
        FractalSpec::TaborGrid { min_level, max_level, delta } => {
            descend_tabor(s, &unit, *min_level, *max_level, delta)
        }
        FractalSpec::CustomRects(rects) => {
            rects.iter().any(|r| seg_intersects_rect(s, r, RectMode::Closed))
        }
    }
}

fn frame_hit(s: &Segment, frame: &AxisRect) -> bool {
    match seg_rect_quick(s.p.to_f64(), s.q.to_f64(), &frame.to_f64_outer()) {
        Some(false) => false,
        Some(true) | None => seg_intersects_rect(s, frame, RectMode::Closed),
    }
}

/// Product-of-intervals families: children are the 2x2 subsquares given by
/// the per-axis child offsets (relative to the frame) returned by `children`.
fn descend_product(
    s: &Segment,
    frame: &AxisRect,
    depth: u32,
    children: &dyn Fn(&Rat) -> Vec<(Rat, Rat)>,
) -> bool {
    if !frame_hit(s, frame) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let w = frame.width();
    let kids = children(&w);
    for (ox, cw) in &kids {
        for (oy, ch) in &kids {
            let x0 = &frame.x0 + ox;
            let y0 = &frame.y0 + oy;
            let child = AxisRect::new(x0.clone(), y0.clone(), &x0 + cw, &y0 + ch).unwrap();
            if descend_product(s, &child, depth - 1, children) {
                return true;
            }
        }
    }
    false
}

fn descend_fat(s: &Segment, frame: &AxisRect, step: u32, stage: u32, lens: &[Rat]) -> bool {
    if !frame_hit(s, frame) {
        return false;
    }
    if step == stage {
        return true;
    }
    let w = frame.width();
    let scale = &lens[(step + 1) as usize] / &lens[step as usize];
    let cw = &w * &scale;
    let offs = [Rat::zero(), &w - &cw];
    for ox in &offs {
        for oy in &offs {
            let x0 = &frame.x0 + ox;
            let y0 = &frame.y0 + oy;
            let child = AxisRect::new(x0.clone(), y0.clone(), &x0 + &cw, &y0 + &cw).unwrap();
            if descend_fat(s, &child, step + 1, stage, lens) {
                return true;
            }
        }
    }
    false
}

fn descend_staircase(s: &Segment, frame: &AxisRect, depth: u32) -> bool {
    if !frame_hit(s, frame) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let w3 = frame.width() / rat_int(3);
    let h2 = frame.height() / rat_int(2);
    let lower = AxisRect::new(
        frame.x0.clone(),
        frame.y0.clone(),
        &frame.x0 + &w3,
        &frame.y0 + &h2,
    )
    .unwrap();
    let upper = AxisRect::new(
        &frame.x1 - &w3,
        &frame.y1 - &h2,
        frame.x1.clone(),
        frame.y1.clone(),
    )
    .unwrap();
    descend_staircase(s, &lower, depth - 1) || descend_staircase(s, &upper, depth - 1)
}

fn descend_tabor(s: &Segment, frame: &AxisRect, level: u32, max_level: u32, delta: &Rat) -> bool {
    if level > max_level {
        return frame_hit(s, frame);
    }
    if !frame_hit(s, frame) {
        return false;
    }
    let fs = frame.width();
    let side = &fs * tabor_side(level, delta);
    let row_pitch = &fs * rat_pow2(-(2 * level as i32));
    let kmax = (BigInt::one() << (2 * level as usize)) - 2;
    for i in 0..3u32 {
        let x0 = &frame.x0 + &fs * tabor_column_x(level, i);
        let x1 = &x0 + &side;
        // Clip the segment to the column strip to bound candidate rows.
        let strip = AxisRect::new(x0.clone(), frame.y0.clone(), x1.clone(), frame.y1.clone());
        let strip = match strip {
            Ok(r) => r,
            Err(_) => continue,
        };
        let Some((t0, t1)) = seg_rect_clip_closed(s, &strip) else {
            continue;
        };
        let a = s.at(&t0);
        let b = s.at(&t1);
        let (ymin, ymax) = if a.y <= b.y { (a.y, b.y) } else { (b.y, a.y) };
        // Box k occupies y in frame.y0 + (k + delta + c_i) * pitch + [0, side].
        let ci = if i == 2 { rat(1, 2) } else { Rat::zero() };
        let base = delta + &ci;
        let hi = (&ymax - &frame.y0) / &row_pitch - &base;
        let lo = (&ymin - &frame.y0) / &row_pitch - &base - tabor_side(level, delta) * rat_pow2(2 * level as i32);
        let mut k = lo.ceil().to_integer();
        if k.is_negative() {
            k = BigInt::zero();
        }
        let mut kend = hi.floor().to_integer();
        if kend > kmax {
            kend = kmax.clone();
        }
        while k <= kend {
            let y0 = &frame.y0 + (&Rat::from_integer(k.clone()) + &base) * &row_pitch;
            let child = AxisRect::new(x0.clone(), y0.clone(), x1.clone(), &y0 + &side).unwrap();
            if descend_tabor(s, &child, level + 1, max_level, delta) {
                return true;
            }
            k += 1;
        }
    }
    false
}

/// Number of open grid cells of size `grid` that meet the explicit union.
///
/// Open-cell counting keeps the count exact for grid-aligned constructions:
/// a rectangle touching a cell only along its boundary does not claim it.
pub fn box_count(obs: &ObstacleSet, grid: &Rat) -> Result<u64> {
    if *grid <= Rat::zero() {
        return Err(Error::Domain("box_count grid size must be positive".into()));
    }
    let rects = obs.rects()?;
    let mut cells: HashSet<(i64, i64)> = HashSet::new();
    for r in rects {
        let ix = open_cell_range(&r.x0, &r.x1, grid)?;
        let iy = open_cell_range(&r.y0, &r.y1, grid)?;
        for i in ix.0..=ix.1 {
            for j in iy.0..=iy.1 {
                cells.insert((i, j));
            }
        }
    }
    Ok(cells.len() as u64)
}

/// Cells i whose open interval (i*g, (i+1)*g) meets the open interval (a, b).
fn open_cell_range(a: &Rat, b: &Rat, g: &Rat) -> Result<(i64, i64)> {
    // i < b/g  and  i > a/g - 1
    let hi_r = b / g;
    let lo_r = a / g;
    let hi = if hi_r.is_integer() { hi_r.to_integer() - 1 } else { hi_r.floor().to_integer() };
    let lo = if lo_r.is_integer() { lo_r.to_integer() } else { lo_r.floor().to_integer() };
    let lo = lo.to_i64().ok_or_else(|| Error::Domain("box_count index overflow".into()))?;
    let hi = hi.to_i64().ok_or_else(|| Error::Domain("box_count index overflow".into()))?;
    Ok((lo, hi))
}

/// Least-squares slope of log N(d) against log(1/d).
pub fn box_dimension_slope(points: &[(f64, u64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(d, _)| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, c)| (*c as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn quick_rect_bounds(rects: &[AxisRect]) -> Vec<RectF> {
    rects.iter().map(AxisRect::to_f64_outer).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn spec_cantor(stage: u32) -> FractalSpec {
        FractalSpec::CantorProduct { ratio: rat(1, 3), stage }
    }

    fn seg(ax: Rat, ay: Rat, bx: Rat, by: Rat) -> Segment {
        Segment::new(Point::new(ax, ay), Point::new(bx, by)).unwrap()
    }

    #[test]
    fn cantor_product_first_subdivision() {
        let obs = ObstacleSet::generate(&spec_cantor(1), DEFAULT_RECT_LIMIT).unwrap();
        let rects = obs.rects().unwrap();
        assert_eq!(rects.len(), 4);
        let expect = [
            (rat_int(0), rat_int(0)),
            (rat_int(0), rat(2, 3)),
            (rat(2, 3), rat_int(0)),
            (rat(2, 3), rat(2, 3)),
        ];
        for (x0, y0) in expect {
            assert!(rects
                .iter()
                .any(|r| r.x0 == x0 && r.y0 == y0 && r.width() == rat(1, 3)));
        }
    }

    #[test]
    fn tabor_grid_level7_count_and_side() {
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 7, delta: rat(1, 32) };
        assert_eq!(spec.rect_count(), 3 * ((1 << 14) - 1));
        assert_eq!(spec.rect_count(), 49149);
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let rects = obs.rects().unwrap();
        assert_eq!(rects.len(), 49149);
        let side = rat(15, 16) * rat_pow2(-14);
        assert!(rects.iter().all(|r| r.width() == side && r.height() == side));
    }

    #[test]
    fn fat_cantor_stage_linear_measure() {
        // m_n = 1 - g (1 - 2^-n); g = 0.08, n = 2 -> 0.94
        let spec = FractalSpec::FatCantorProduct { total_gap: rat(2, 25), stage: 2 };
        let m = stage_measures(&spec).unwrap();
        assert_eq!(m.linear.unwrap(), rat(47, 50));
        // Explicit expansion agrees with the formula.
        let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        assert_eq!(obs.measure(), &(rat(47, 50) * rat(47, 50)));
    }

    #[test]
    fn cantor_stage_measures_by_counting() {
        let m = stage_measures(&spec_cantor(2)).unwrap();
        assert_eq!(m.linear.unwrap(), rat(4, 9));
        assert_eq!(m.planar, rat(16, 81));
        assert_eq!(m.boundary, rat(64, 9));
        // Explicit expansion agrees.
        let obs = ObstacleSet::generate(&spec_cantor(2), DEFAULT_RECT_LIMIT).unwrap();
        assert_eq!(obs.measure(), &rat(16, 81));
        assert_eq!(obs.boundary_length(), &rat(64, 9));
    }

    #[test]
    fn staircase_cover_sum_closed_form() {
        // 2^6 * sqrt(9^-6 + 4^-6) = sqrt(1 + (4/9)^6)
        let s = cover_sum(&FractalSpec::HoleyStaircase { stage: 6 }).unwrap();
        let expected = (1.0 + (4f64 / 9.0).powi(6)).sqrt();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 1.0039).abs() < 1e-3);
    }

    #[test]
    fn generate_respects_limit() {
        let err = ObstacleSet::generate(&spec_cantor(12), 1000).unwrap_err();
        assert!(matches!(err, Error::ExplicitExpansion { .. }));
        let obs = ObstacleSet::auto(&spec_cantor(12), 1000).unwrap();
        assert!(!obs.is_explicit());
    }

    #[test]
    fn diagonal_hits_cantor_product() {
        let obs = ObstacleSet::generate(&spec_cantor(1), DEFAULT_RECT_LIMIT).unwrap();
        let s = seg(rat_int(0), rat_int(0), rat_int(1), rat_int(1));
        assert!(obs.segment_hits(&s));
    }

    #[test]
    fn implicit_matches_explicit_on_tabor_level7() {
        use rand::{Rng, SeedableRng};
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 7, delta: rat(1, 32) };
        let explicit = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let implicit = ObstacleSet { repr: Repr::Implicit(spec.clone()), measures: implicit_measures(&spec) };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let den = 1i64 << 20;
        for _ in 0..200 {
            let mut draw = || rat(rng.gen_range(-(den / 2)..(3 * den / 2)), den);
            let (ax, ay, bx, by) = (draw(), draw(), draw(), draw());
            if ax == bx && ay == by {
                continue;
            }
            let s = seg(ax, ay, bx, by);
            assert_eq!(explicit.segment_hits(&s), implicit.segment_hits(&s));
        }
    }

    #[test]
    fn horizontal_line_below_first_row_misses_tabor() {
        // Below every box: boxes in columns i=0,1 start at height delta*2^-14.
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 7, delta: rat(1, 32) };
        let obs = ObstacleSet::auto(&spec, DEFAULT_RECT_LIMIT).unwrap();
        let y = rat(1, 32) * rat_pow2(-14) / rat_int(2);
        let s = seg(rat_int(-1), y.clone(), rat_int(2), y);
        assert!(!obs.segment_hits(&s));
        // The spec-sheet height delta/2 = 2^-6 threads the i=0,1 row gap but
        // lands inside an i=2 (half-shifted) box; verified exactly both ways.
        let y2 = rat(1, 64);
        let s2 = seg(rat_int(-1), y2.clone(), rat_int(2), y2);
        let explicit = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT).unwrap();
        assert_eq!(obs.segment_hits(&s2), explicit.segment_hits(&s2));
    }

    #[test]
    fn box_count_self_similar() {
        let obs = ObstacleSet::generate(&spec_cantor(5), DEFAULT_RECT_LIMIT).unwrap();
        assert_eq!(box_count(&obs, &rat(1, 27)).unwrap(), 64);
        assert_eq!(box_count(&obs, &rat(1, 3)).unwrap(), 4);
        // Regression slope over k = 1..5 pins log 4 / log 3.
        let pts: Vec<(f64, u64)> = (1..=5)
            .map(|k| {
                let d = rat(1, 3).pow(k);
                (to_f64(&d), box_count(&obs, &d).unwrap())
            })
            .collect();
        let slope = box_dimension_slope(&pts);
        assert!((slope - 4f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((slope - 1.2619).abs() < 0.01);
    }

    #[test]
    fn staircase_box_count_bounds() {
        let obs = ObstacleSet::generate(&FractalSpec::HoleyStaircase { stage: 6 }, DEFAULT_RECT_LIMIT)
            .unwrap();
        let n = box_count(&obs, &rat_pow2(-6)).unwrap();
        assert!(n >= 64 && n <= 3 * 64, "N = {n}");
    }

    #[test]
    fn nested_stages_are_subsets() {
        let outer = ObstacleSet::generate(&spec_cantor(2), DEFAULT_RECT_LIMIT).unwrap();
        let inner = ObstacleSet::generate(&spec_cantor(3), DEFAULT_RECT_LIMIT).unwrap();
        for small in inner.rects().unwrap() {
            assert!(outer.rects().unwrap().iter().any(|big| {
                big.x0 <= small.x0 && small.x1 <= big.x1 && big.y0 <= small.y0 && small.y1 <= big.y1
            }));
        }
    }

    #[test]
    fn disjointness_validator_rejects_overlap() {
        let a = AxisRect::new(rat_int(0), rat_int(0), rat_int(1), rat_int(1)).unwrap();
        let b = AxisRect::new(rat(1, 2), rat(1, 2), rat_int(2), rat_int(2)).unwrap();
        assert!(ObstacleSet::from_rects(vec![a.clone(), b]).is_err());
        // Touching closed rects are also rejected.
        let c = AxisRect::new(rat_int(1), rat_int(0), rat_int(2), rat_int(1)).unwrap();
        assert!(ObstacleSet::from_rects(vec![a.clone(), c]).is_err());
        let d = AxisRect::new(rat_int(2), rat_int(2), rat_int(3), rat_int(3)).unwrap();
        assert!(ObstacleSet::from_rects(vec![a, d]).is_ok());
    }
}
