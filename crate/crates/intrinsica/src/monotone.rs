//! Delta-monotonicity estimation for sampled planar maps, the cone-image
//! relation check, and the builtin example generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Cone, Vec2};

/// A finite sample of a planar map: distinct sources with their images.
#[derive(Debug, Clone)]
pub struct MapSample {
    pub name: String,
    pub pairs: Vec<(Vec2, Vec2)>,
}

impl MapSample {
    pub fn new(name: impl Into<String>, pairs: Vec<(Vec2, Vec2)>) -> Result<Self> {
        for (x, fx) in &pairs {
            if !(x.x.is_finite() && x.y.is_finite() && fx.x.is_finite() && fx.y.is_finite()) {
                return Err(Error::InvalidInput("non-finite sample entry".into()));
            }
        }
        for i in 0..pairs.len() {
            for j in (i + 1)..pairs.len() {
                if pairs[i].0.sub(pairs[j].0).norm() == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "duplicate source point at rows {i} and {j}"
                    )));
                }
            }
        }
        Ok(MapSample { name: name.into(), pairs })
    }
}

/// Result of the monotonicity scan over all point pairs.
#[derive(Debug, Clone, Copy)]
pub struct DeltaEstimate {
    /// min over pairs of <df, dx> / (|df| |dx|): the largest delta for which
    /// the sample is delta-monotone.
    pub delta_hat: f64,
    /// Smallest inner product <df, dx> seen (including degenerate pairs).
    pub min_inner: f64,
    /// Pairs with df = 0, excluded from the minimum.
    pub degenerate: u64,
    /// Pairs that entered the minimum.
    pub compared: u64,
}

/// Scans all pairs; pairs with equal images are vacuous for the defining
/// inequality and are only counted.
pub fn delta_infimum(s: &MapSample) -> Result<DeltaEstimate> {
    if s.pairs.len() < 2 {
        return Err(Error::InvalidInput("need at least two sample pairs".into()));
    }
    let mut delta_hat = f64::INFINITY;
    let mut min_inner = f64::INFINITY;
    let mut degenerate = 0u64;
    let mut compared = 0u64;
    for i in 0..s.pairs.len() {
        for j in (i + 1)..s.pairs.len() {
            let dx = s.pairs[i].0.sub(s.pairs[j].0);
            let df = s.pairs[i].1.sub(s.pairs[j].1);
            let inner = df.dot(dx);
            min_inner = min_inner.min(inner);
            let nf = df.norm();
            if nf == 0.0 {
                degenerate += 1;
                continue;
            }
            compared += 1;
            // Exactly parallel differences (e.g. the identity map) must give
            // cosine 1; sqrt round-off would otherwise shave an ulp.
            let c = if df.x == dx.x && df.y == dx.y {
                1.0
            } else {
                (inner / (nf * dx.norm())).clamp(-1.0, 1.0)
            };
            delta_hat = delta_hat.min(c);
        }
    }
    if compared == 0 {
        return Err(Error::Undefined("all sample pairs have equal images".into()));
    }
    Ok(DeltaEstimate { delta_hat, min_inner, degenerate, compared })
}

/// Checks the cone-image relation on the sample: every source in
/// C(p, v, theta) must map into C(f(p), v, theta + arccos(delta)).
/// Requires theta + arccos(delta) < pi/2 and p among the sample sources.
pub fn cone_image_check(
    s: &MapSample,
    p: Vec2,
    v: Vec2,
    theta: f64,
    delta: f64,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain("delta must lie in [0, 1]".into()));
    }
    let alpha = theta + delta.clamp(-1.0, 1.0).acos();
    if !(theta > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "need 0 < theta and theta + arccos(delta) < pi/2 (got alpha = {alpha})"
        )));
    }
    let fp = s
        .pairs
        .iter()
        .find(|(x, _)| x.sub(p).norm() == 0.0)
        .map(|(_, fx)| *fx)
        .ok_or_else(|| Error::InvalidInput("apex p is not a sample source".into()))?;
    let source_cone = Cone::new(p, v, theta)?;
    let image_cone = Cone::new(fp, v, alpha)?;
    for (x, fx) in &s.pairs {
        if source_cone.contains(*x) && !image_cone.contains(*fx) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builtin sample generators reproducing the worked examples.
pub mod samples {
    use super::*;

    /// Identity map on seeded points in [-1, 1]^2.
    pub fn identity(n: usize, seed: u64) -> Result<MapSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n);
        while pairs.len() < n {
            let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            pairs.push((x, x));
        }
        MapSample::new("identity", dedup_sources(pairs))
    }

    /// f(z) = -1/z on the sector |arg z| < pi/6, radii log-uniform in
    /// [1e-3, 1e3]. The map is 1/2-monotone there.
    pub fn inv_neg_sector(n: usize, seed: u64) -> Result<MapSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let phi = rng.gen_range(-std::f64::consts::FRAC_PI_6..std::f64::consts::FRAC_PI_6);
            let r = 10f64.powf(rng.gen_range(-3.0..3.0));
            let z = Vec2::new(r * phi.cos(), r * phi.sin());
            // -1/z = -conj(z)/|z|^2.
            let d = z.norm();
            let fz = Vec2::new(-z.x / (d * d), z.y / (d * d));
            pairs.push((z, fz));
        }
        MapSample::new("inv-neg-sector", dedup_sources(pairs))
    }

    /// f(x) = x + x/|x| on seeded points of the annulus 1e-3 <= |x| <= 10.
    pub fn radial_push(n: usize, seed: u64) -> Result<MapSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = 10f64.powf(rng.gen_range(-3.0..1.0));
            let x = Vec2::new(r * phi.cos(), r * phi.sin());
            pairs.push((x, radial_push_map(x)));
        }
        MapSample::new("radial-push", dedup_sources(pairs))
    }

    pub fn radial_push_map(x: Vec2) -> Vec2 {
        let n = x.norm();
        x.add(x.scale(1.0 / n))
    }

    /// Two-point sample on which f(x) = x + x/|x| keeps all inner products
    /// positive but the monotonicity cosine collapses to about 3*theta:
    /// sources 2*eps*(1, 0) and eps*(cos 2t, sin 2t) with eps = t^3.
    pub fn radial_push_adversarial(theta: f64) -> Result<MapSample> {
        if !(theta > 0.0 && theta < 0.1) {
            return Err(Error::Domain("adversarial angle must lie in (0, 0.1)".into()));
        }
        let eps = theta * theta * theta;
        let u = Vec2::new(2.0 * eps, 0.0);
        let v = Vec2::new(eps * (2.0 * theta).cos(), eps * (2.0 * theta).sin());
        let pairs = vec![(u, radial_push_map(u)), (v, radial_push_map(v))];
        MapSample::new("radial-push-adversarial", pairs)
    }

    fn dedup_sources(mut pairs: Vec<(Vec2, Vec2)>) -> Vec<(Vec2, Vec2)> {
        let mut out: Vec<(Vec2, Vec2)> = Vec::with_capacity(pairs.len());
        for (x, fx) in pairs.drain(..) {
            if out.iter().all(|(y, _)| y.sub(x).norm() != 0.0) {
                out.push((x, fx));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;

    #[test]
    fn identity_has_delta_one() {
        let s = identity(200, 1).unwrap();
        let e = delta_infimum(&s).unwrap();
        assert_eq!(e.delta_hat, 1.0);
        assert_eq!(e.degenerate, 0);
    }

    #[test]
    fn inv_neg_sector_is_half_monotone() {
        let s = inv_neg_sector(1000, 2).unwrap();
        let e = delta_infimum(&s).unwrap();
        assert!(e.delta_hat >= 0.5 - 1e-9, "delta_hat = {}", e.delta_hat);
        assert!(e.delta_hat <= 1.0);
    }

    #[test]
    fn adversarial_sample_narrowly_fails() {
        let s = radial_push_adversarial(0.01).unwrap();
        let e = delta_infimum(&s).unwrap();
        assert!(e.delta_hat > 0.0);
        assert!(e.delta_hat < 0.05, "delta_hat = {}", e.delta_hat);
        assert!(e.min_inner > 0.0);
        // Cosine collapses like 3*theta as the pair tightens.
        let smaller = delta_infimum(&radial_push_adversarial(0.002).unwrap()).unwrap();
        assert!(smaller.delta_hat < e.delta_hat);
    }

    #[test]
    fn radial_push_stays_positive() {
        let s = radial_push(500, 3).unwrap();
        let e = delta_infimum(&s).unwrap();
        assert!(e.min_inner > 0.0);
        assert!(e.delta_hat > 0.0);
    }

    #[test]
    fn similarity_invariance_of_delta_hat() {
        let s = inv_neg_sector(300, 5).unwrap();
        let base = delta_infimum(&s).unwrap().delta_hat;
        let moved: Vec<(Vec2, Vec2)> = s
            .pairs
            .iter()
            .map(|(x, fx)| {
                (
                    x.scale(3.5).add(Vec2::new(7.0, -2.0)),
                    fx.scale(0.25).add(Vec2::new(-1.0, 4.0)),
                )
            })
            .collect();
        let t = delta_infimum(&MapSample::new("moved", moved).unwrap()).unwrap().delta_hat;
        assert!((base - t).abs() < 1e-12, "{base} vs {t}");
    }

    #[test]
    fn restriction_can_only_raise_delta_hat() {
        let s = radial_push(200, 8).unwrap();
        let full = delta_infimum(&s).unwrap().delta_hat;
        let half = MapSample::new("half", s.pairs[..100].to_vec()).unwrap();
        let restricted = delta_infimum(&half).unwrap().delta_hat;
        assert!(restricted >= full - 1e-15);
    }

    #[test]
    fn degenerate_pairs_are_counted_or_fatal() {
        let constant = MapSample::new(
            "constant",
            vec![
                (Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
                (Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)),
            ],
        )
        .unwrap();
        assert!(matches!(delta_infimum(&constant), Err(Error::Undefined(_))));
        let mixed = MapSample::new(
            "mixed",
            vec![
                (Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
                (Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)),
                (Vec2::new(0.0, 1.0), Vec2::new(2.0, 1.0)),
            ],
        )
        .unwrap();
        let e = delta_infimum(&mixed).unwrap();
        assert_eq!(e.degenerate, 1);
        assert_eq!(e.compared, 2);
    }

    #[test]
    fn cone_image_identity_and_half_monotone() {
        let s = identity(100, 4).unwrap();
        let p = s.pairs[0].0;
        assert!(cone_image_check(&s, p, Vec2::new(1.0, 0.0), 0.3, 1.0).unwrap());

        let mut inv = inv_neg_sector(500, 6).unwrap();
        let apex = Vec2::new(1.0, 0.0);
        inv.pairs.push((apex, Vec2::new(-1.0, 0.0)));
        assert!(cone_image_check(&inv, apex, Vec2::new(1.0, 0.0), 0.2, 0.5).unwrap());
    }

    #[test]
    fn cone_image_fails_on_adversarial_pair() {
        let s = radial_push_adversarial(0.01).unwrap();
        let p = s.pairs[0].0;
        let axis = s.pairs[1].0.sub(p);
        let ok = cone_image_check(&s, p, axis, 0.1, 0.5).unwrap();
        assert!(!ok, "low-monotonicity pair should escape the image cone");
    }

    #[test]
    fn cone_image_rejects_wide_angles() {
        let s = identity(10, 9).unwrap();
        let p = s.pairs[0].0;
        assert!(cone_image_check(&s, p, Vec2::new(1.0, 0.0), 1.0, 0.5).is_err());
    }
}
