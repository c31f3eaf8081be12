//! Property-based checks of the geometric invariants.

use proptest::prelude::*;

use intrinsica::fractal::{FractalSpec, ObstacleSet, DEFAULT_RECT_LIMIT};
use intrinsica::geometry::{
    chord_cone_check, seg_intersects_rect, seg_rect_quick, AxisRect, Point, Polyline, RectMode,
    Segment, Vec2,
};
use intrinsica::monotone::{delta_infimum, samples, MapSample};
use intrinsica::rat::{rat, Rat};
use intrinsica::thinness::cone_reach_feasible;

fn dyadic() -> impl Strategy<Value = Rat> {
    (-(1i64 << 12)..(1i64 << 12)).prop_map(|n| rat(n, 1 << 10))
}

fn point() -> impl Strategy<Value = Point> {
    (dyadic(), dyadic()).prop_map(|(x, y)| Point::new(x, y))
}

fn polyline(max_len: usize) -> impl Strategy<Value = Polyline> {
    prop::collection::vec(point(), 2..max_len)
        .prop_filter("consecutive vertices must differ", |v| {
            v.windows(2).all(|w| w[0] != w[1])
        })
        .prop_map(|v| Polyline::new(v).unwrap())
}

fn rect() -> impl Strategy<Value = AxisRect> {
    (dyadic(), dyadic(), 1i64..200, 1i64..200).prop_map(|(x0, y0, w, h)| {
        AxisRect::new(x0.clone(), y0.clone(), x0 + rat(w, 1 << 10), y0 + rat(h, 1 << 10)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polyline_length_invariant_under_rigid_motions(
        c in polyline(8),
        angle in 0.0..std::f64::consts::TAU,
        tx in -5.0..5.0f64,
        ty in -5.0..5.0f64,
    ) {
        let base = c.length();
        let (s, co) = angle.sin_cos();
        let moved: f64 = c
            .vertices()
            .windows(2)
            .map(|w| {
                let rot = |p: Vec2| Vec2::new(co * p.x - s * p.y + tx, s * p.x + co * p.y + ty);
                rot(w[1].to_f64()).sub(rot(w[0].to_f64())).norm()
            })
            .sum();
        let straight = c.first().dist(c.last());
        prop_assert!(base >= straight - 1e-12);
        prop_assert!((base - moved).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn chord_cone_check_monotone_in_eps(
        c in polyline(6).prop_filter("open polyline", |c| c.first() != c.last()),
        eps in 0.01..1.5f64,
        widen in 0.0..0.5f64,
    ) {
        if chord_cone_check(&c, eps).unwrap() {
            prop_assert!(chord_cone_check(&c, eps + widen + 1e-12).unwrap());
        }
    }

    #[test]
    fn float_filter_agrees_with_exact_predicate(
        p in point(),
        q in point(),
        r in rect(),
    ) {
        prop_assume!(p != q);
        let seg = Segment::new(p.clone(), q.clone()).unwrap();
        if let Some(certified) = seg_rect_quick(p.to_f64(), q.to_f64(), &r.to_f64_outer()) {
            // A certified crossing means the open interior is met; a
            // certified miss means even the closed rectangle is missed.
            if certified {
                prop_assert!(seg_intersects_rect(&seg, &r, RectMode::OpenInterior));
            } else {
                prop_assert!(!seg_intersects_rect(&seg, &r, RectMode::Closed));
            }
        }
    }

    #[test]
    fn cantor_hits_monotone_under_deepening(p in point(), q in point(), stage in 1u32..4) {
        prop_assume!(p != q);
        let seg = Segment::new(p, q).unwrap();
        let coarse = ObstacleSet::generate(
            &FractalSpec::CantorProduct { ratio: rat(1, 3), stage },
            DEFAULT_RECT_LIMIT,
        )
        .unwrap();
        let fine = ObstacleSet::generate(
            &FractalSpec::CantorProduct { ratio: rat(1, 3), stage: stage + 1 },
            DEFAULT_RECT_LIMIT,
        )
        .unwrap();
        // Finer stages are subsets: a miss stays a miss.
        if !coarse.segment_hits(&seg) {
            prop_assert!(!fine.segment_hits(&seg));
        }
    }

    #[test]
    fn cone_feasibility_monotone_in_slope(
        stage in 1u32..4,
        num in 10i64..100,
        widen in 1i64..100,
    ) {
        let a = Point::new(rat(0, 1), rat(1, 3));
        let b = Point::new(rat(1, 1), rat(2, 3));
        let obs = ObstacleSet::generate(
            &FractalSpec::HoleyStaircase { stage },
            DEFAULT_RECT_LIMIT,
        )
        .unwrap();
        let narrow = cone_reach_feasible(&a, &b, &rat(num, 100), &obs).unwrap();
        if narrow.feasible {
            let wide = cone_reach_feasible(&a, &b, &rat(num + widen, 100), &obs).unwrap();
            prop_assert!(wide.feasible);
        }
    }

    #[test]
    fn delta_hat_rises_under_restriction_and_survives_similarity(
        seed in 0u64..1000,
        keep in 2usize..50,
    ) {
        let s = samples::radial_push(50, seed).unwrap();
        let full = delta_infimum(&s).unwrap().delta_hat;
        let sub = MapSample::new("sub", s.pairs[..keep.min(s.pairs.len())].to_vec()).unwrap();
        if sub.pairs.len() >= 2 {
            prop_assert!(delta_infimum(&sub).unwrap().delta_hat >= full - 1e-15);
        }
        let moved: Vec<(Vec2, Vec2)> = s
            .pairs
            .iter()
            .map(|(x, fx)| (x.scale(2.0).add(Vec2::new(1.0, -3.0)), fx.scale(0.5)))
            .collect();
        let t = delta_infimum(&MapSample::new("moved", moved).unwrap()).unwrap().delta_hat;
        prop_assert!((full - t).abs() < 1e-12);
    }
}
