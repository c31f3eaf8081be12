//! The acceptance suite: ten criteria spanning the whole crate, each reduced
//! to concrete checks on fixed scenes and seeds. The `accept` subcommand and
//! the integration test both drive `run_acceptance`.

use rayon::prelude::*;

use crate::error::Result;
use crate::fractal::{
    box_count, box_dimension_slope, FractalSpec, ObstacleSet, DEFAULT_RECT_LIMIT,
};
use crate::geometry::{chord_cone_check, seg_intersects_rect, Point, RectMode};
use crate::io::{sig12, sweep_rows_to_csv};
use crate::monotone::{delta_infimum, samples};
use crate::path::{
    boundary_length_in_ball, detour_construct, esp_grid_oracle, esp_visibility, random_scene,
    PathResult,
};
use crate::rat::{rat, rat_int, rat_pow2, to_f64, Rat};
use crate::report::Report;
use crate::thinness::{claim1_certificate, claim1_sample_lines, cone_reach_feasible, segment_witness};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct AcceptanceRun {
    pub outcomes: Vec<CriterionOutcome>,
    pub report: Report,
    /// Deterministic CSV body; criterion 10 compares two runs byte for byte.
    pub csv: String,
    pub passed: bool,
}

impl AcceptanceRun {
    /// One pass/fail line per criterion.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&format!(
                "criterion {:2} [{}] {} — {}\n",
                o.id,
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.detail
            ));
        }
        out
    }
}

/// Tracks the length-estimate inequality across every shortest-path run in
/// the suite (criterion 3).
struct EspAudit {
    rows: Vec<(String, f64, f64, f64)>, // (label, gap, lemma bound, gap/H1)
    all_hold: bool,
    max_ratio: f64,
}

impl EspAudit {
    fn new() -> Self {
        EspAudit { rows: Vec::new(), all_hold: true, max_ratio: 0.0 }
    }

    fn record(&mut self, label: String, a: &Point, obs: &ObstacleSet, res: &PathResult) {
        let h1_total = to_f64(obs.boundary_length());
        let big_l = res.straight_distance + std::f64::consts::FRAC_PI_2 * h1_total;
        let rects = obs.rects().expect("audited scenes are explicit");
        let h1 = boundary_length_in_ball(rects, a.to_f64(), big_l);
        let bound = std::f64::consts::FRAC_PI_2 * h1;
        let ratio = if h1 > 0.0 { res.gap / h1 } else { 0.0 };
        self.all_hold &= res.gap <= bound + 1e-12;
        self.max_ratio = self.max_ratio.max(ratio);
        self.rows.push((label, res.gap, bound, ratio));
    }
}

pub fn run_acceptance(seed: u64) -> Result<AcceptanceRun> {
    let first = run_once(seed)?;
    let second_csv = run_once(seed)?.1;
    let (mut outcomes, csv, mut report) = first;
    let deterministic = csv == second_csv;
    outcomes.push(CriterionOutcome {
        id: 10,
        name: "determinism",
        passed: deterministic,
        detail: if deterministic {
            format!("two runs produced identical {}-byte CSV bodies", csv.len())
        } else {
            "CSV bodies differ between identically-seeded runs".into()
        },
    });
    report.checks.push(crate::report::IneqCheck {
        name: "determinism-byte-identical".into(),
        lhs: csv.len().to_string(),
        rhs: second_csv.len().to_string(),
        relation: "==".into(),
        holds: deterministic,
    });
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(AcceptanceRun { outcomes, report, csv, passed })
}

#[allow(clippy::type_complexity)]
fn run_once(seed: u64) -> Result<(Vec<CriterionOutcome>, String, Report)> {
    let mut report = Report::new("accept").with_seed(seed);
    let mut audit = EspAudit::new();
    let mut csv = String::new();
    let mut outcomes = Vec::with_capacity(10);

    let origin = Point::new(rat_int(0), rat_int(0));
    let corner = Point::new(rat_int(1), rat_int(1));

    // 1. Fat-product lower bound.
    {
        let gap_floor = 1.8 - 2f64.sqrt();
        let mut ok = true;
        let mut detail = String::new();
        let results: Vec<(u32, PathResult, ObstacleSet, Rat)> = (1u32..=5)
            .into_par_iter()
            .map(|n| {
                let spec = FractalSpec::FatCantorProduct { total_gap: rat(2, 25), stage: n };
                let obs = ObstacleSet::generate(&spec, DEFAULT_RECT_LIMIT)?;
                let m_n = rat_int(1) - rat(2, 25) * (rat_int(1) - rat_pow2(-(n as i32)));
                let res = esp_visibility(&origin, &corner, &obs)?;
                Ok((n, res, obs, m_n))
            })
            .collect::<Result<Vec<_>>>()?;
        for (n, res, obs, m_n) in &results {
            let floor = 2.0 * to_f64(m_n) - 1e-9;
            ok &= res.length >= floor && res.length > 1.8;
            if *n >= 2 {
                ok &= res.gap > gap_floor;
            }
            audit.record(format!("fat-cantor stage {n}"), &origin, obs, res);
            csv.push_str(&format!(
                "fat,{n},{},{}\n",
                sig12(res.length),
                sig12(res.gap)
            ));
            detail.push_str(&format!("n={n}: len {} >= {}; ", sig12(res.length), sig12(floor)));
        }
        outcomes.push(CriterionOutcome {
            id: 1,
            name: "fat-product lower bound",
            passed: ok,
            detail,
        });
    }

    // 2. Removability convergence for the thin product, with the grid-oracle
    //    pre-run recorded.
    {
        let stages: Vec<(u32, FractalSpec)> = (1u32..=5)
            .map(|n| (n, FractalSpec::CantorProduct { ratio: rat(1, 3), stage: n }))
            .collect();
        let rows = crate::path::removability_sweep(&stages, &origin, &corner, DEFAULT_RECT_LIMIT)?;
        for (n, spec) in &stages {
            // Re-audit each stage for criterion 3 bookkeeping.
            let obs = ObstacleSet::generate(spec, DEFAULT_RECT_LIMIT)?;
            let res = esp_visibility(&origin, &corner, &obs)?;
            audit.record(format!("cantor stage {n}"), &origin, &obs, &res);
        }
        csv.push_str(&sweep_rows_to_csv(&rows));
        let gap1 = rows[0].gap;
        let gap5 = rows[4].gap;
        let positive = rows.iter().all(|r| r.gap > 0.0);
        let obs5 = ObstacleSet::generate(&stages[4].1, DEFAULT_RECT_LIMIT)?;
        let oracle = esp_grid_oracle(&origin, &corner, &obs5, &rat(1, 243), seed)?;
        report.note(format!(
            "grid-oracle pre-run, stage 5, resolution 1/243: length {}, gap {}; threshold 0.15",
            sig12(oracle.length),
            sig12(oracle.gap)
        ));
        let ok = positive && gap5 < gap1 / 2.0 && gap5 < 0.15;
        report.check_le("cantor-gap5-below-threshold", gap5, 0.15);
        outcomes.push(CriterionOutcome {
            id: 2,
            name: "removability convergence",
            passed: ok,
            detail: format!(
                "gap1 {} gap5 {} oracle-gap {}",
                sig12(gap1),
                sig12(gap5),
                sig12(oracle.gap)
            ),
        });
    }

    // 4. Detour construction on random scenes.
    {
        let outcomes_per_scene: Vec<Result<(bool, f64)>> = (0..50u64)
            .into_par_iter()
            .map(|i| {
                let (a, b, obs) = random_scene(200, seed.wrapping_add(1000 + i));
                let exact = esp_visibility(&a, &b, &obs)?;
                let det = detour_construct(&a, &b, &obs)?;
                det.result.validate(&a, &b, &obs)?;
                let bound =
                    det.result.straight_distance + to_f64(&det.intersected_perimeter) / 2.0;
                let ok = det.result.length >= exact.length - 1e-9
                    && det.result.length <= bound + 1e-9;
                Ok((ok, det.result.length))
            })
            .collect();
        let mut ok = true;
        for (i, r) in outcomes_per_scene.into_iter().enumerate() {
            let (scene_ok, len) = r?;
            ok &= scene_ok;
            csv.push_str(&format!("detour,{i},{}\n", sig12(len)));
        }
        outcomes.push(CriterionOutcome {
            id: 4,
            name: "detour construction",
            passed: ok,
            detail: "50 scenes: valid, >= exact, <= straight + perimeters/2".into(),
        });
    }

    // 5. Oracle agreement on random scenes (also feeds criterion 3's audit).
    {
        let per_scene: Vec<Result<(f64, String, Point, ObstacleSet, PathResult)>> = (0..20u64)
            .into_par_iter()
            .map(|i| {
                let (a, b, obs) = random_scene(50, seed.wrapping_add(2000 + i));
                let exact = esp_visibility(&a, &b, &obs)?;
                let oracle = esp_grid_oracle(&a, &b, &obs, &rat(1, 256), seed)?;
                let ratio = oracle.length / exact.length;
                Ok((ratio, format!("oracle scene {i}"), a, obs, exact))
            })
            .collect();
        let mut ok = true;
        let mut worst: f64 = 1.0;
        for r in per_scene {
            let (ratio, label, a, obs, exact) = r?;
            ok &= (1.0 - 1e-9..=1.015).contains(&ratio);
            worst = worst.max(ratio);
            audit.record(label.clone(), &a, &obs, &exact);
            csv.push_str(&format!("oracle,{label},{}\n", sig12(ratio)));
        }
        outcomes.push(CriterionOutcome {
            id: 5,
            name: "oracle agreement",
            passed: ok,
            detail: format!("worst oracle/exact ratio {}", sig12(worst)),
        });
    }

    // 6. Staircase cone blocking.
    {
        let a = Point::new(rat_int(0), rat(1, 3));
        let b = Point::new(rat_int(1), rat(2, 3));
        let mut ok = true;
        for stage in 2u32..=6 {
            let obs = ObstacleSet::generate(
                &FractalSpec::HoleyStaircase { stage },
                DEFAULT_RECT_LIMIT,
            )?;
            let shallow = cone_reach_feasible(&a, &b, &rat(31, 100), &obs)?;
            ok &= !shallow.feasible;
            csv.push_str(&format!("staircase,{stage},31/100,{}\n", shallow.feasible));
        }
        let obs4 =
            ObstacleSet::generate(&FractalSpec::HoleyStaircase { stage: 4 }, DEFAULT_RECT_LIMIT)?;
        let wide = cone_reach_feasible(&a, &b, &rat_int(1), &obs4)?;
        let mut wide_ok = wide.feasible;
        if let Some(poly) = &wide.polyline {
            wide_ok &= chord_cone_check(poly, 1f64.atan() + 1e-9)?;
            for edge in poly.edges() {
                for r in obs4.rects()? {
                    wide_ok &= !seg_intersects_rect(&edge, r, RectMode::OpenInterior);
                }
            }
        } else {
            wide_ok = false;
        }
        csv.push_str(&format!("staircase,4,1,{}\n", wide.feasible));
        outcomes.push(CriterionOutcome {
            id: 6,
            name: "staircase cone blocking",
            passed: ok && wide_ok,
            detail: "slope 31/100 blocked at stages 2..6; slope 1 feasible at stage 4".into(),
        });
    }

    // 7. Grid blocking: certificate, line sweep, witness absence.
    {
        let cert_ok = claim1_certificate(&rat(1, 32))? && !claim1_certificate(&rat(1, 24))?;
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 8, delta: rat(1, 32) };
        let lines = claim1_sample_lines(&spec, 10_000, seed, 1000)?;
        let obs = ObstacleSet::auto(&spec, 1000)?;
        let witness = segment_witness(
            &Point::new(rat(-1, 2), rat(1, 2)),
            &Point::new(rat(3, 2), rat(1, 2)),
            &rat(1, 4),
            &obs,
            100_000,
            seed,
        )?;
        let ok = cert_ok && lines.all_hit && witness.witness.is_none();
        csv.push_str(&format!(
            "claim1,{},{},{}\n",
            lines.tested,
            lines.all_hit,
            witness.witness.is_none()
        ));
        outcomes.push(CriterionOutcome {
            id: 7,
            name: "grid blocking claim",
            passed: ok,
            detail: format!(
                "certificate(1/32,1/24)=({},{}); {} lines all hit; no witness in {} samples",
                claim1_certificate(&rat(1, 32))?,
                claim1_certificate(&rat(1, 24))?,
                lines.tested,
                witness.samples
            ),
        });
    }

    // 8. Monotonicity examples.
    {
        let identity = delta_infimum(&samples::identity(200, seed)?)?;
        let sector = delta_infimum(&samples::inv_neg_sector(1000, seed)?)?;
        let adversarial = delta_infimum(&samples::radial_push_adversarial(0.01)?)?;
        let ok = identity.delta_hat == 1.0
            && sector.delta_hat >= 0.5 - 1e-9
            && adversarial.delta_hat < 0.05
            && adversarial.min_inner > 0.0;
        report.check_ge("inv-neg-sector-delta-hat", sector.delta_hat, 0.5 - 1e-9);
        csv.push_str(&format!(
            "monotone,{},{},{}\n",
            sig12(identity.delta_hat),
            sig12(sector.delta_hat),
            sig12(adversarial.delta_hat)
        ));
        outcomes.push(CriterionOutcome {
            id: 8,
            name: "monotonicity examples",
            passed: ok,
            detail: format!(
                "identity {} sector {} adversarial {}",
                sig12(identity.delta_hat),
                sig12(sector.delta_hat),
                sig12(adversarial.delta_hat)
            ),
        });
    }

    // 9. Box-count dimension sanity.
    {
        let obs = ObstacleSet::generate(
            &FractalSpec::CantorProduct { ratio: rat(1, 3), stage: 5 },
            DEFAULT_RECT_LIMIT,
        )?;
        let mut points = Vec::new();
        for k in 1..=5i32 {
            let g = rat(1, 3i64.pow(k as u32));
            let n = box_count(&obs, &g)?;
            points.push((to_f64(&g), n));
            csv.push_str(&format!("boxcount,{k},{n}\n"));
        }
        let slope = box_dimension_slope(&points);
        let expected = 4f64.ln() / 3f64.ln();
        let ok = (slope - 1.2619).abs() <= 0.01;
        outcomes.push(CriterionOutcome {
            id: 9,
            name: "box-count dimension",
            passed: ok,
            detail: format!("slope {} (log 4 / log 3 = {})", sig12(slope), sig12(expected)),
        });
    }

    // 3. Length-estimate inequality across everything audited above.
    {
        for (label, gap, bound, _) in &audit.rows {
            report.check_le(format!("length-estimate: {label}"), *gap, *bound);
        }
        report.report_ratio("max gap/H1 vs conjectured constant", audit.max_ratio, 1.0);
        csv.push_str(&format!("lemma,max-ratio,{}\n", sig12(audit.max_ratio)));
        let outcome = CriterionOutcome {
            id: 3,
            name: "length-estimate inequality",
            passed: audit.all_hold,
            detail: format!(
                "{} runs audited; max gap/H1 = {} (reported, not asserted)",
                audit.rows.len(),
                sig12(audit.max_ratio)
            ),
        };
        // Keep criteria ordered by id in the summary.
        let pos = outcomes
            .iter()
            .position(|o: &CriterionOutcome| o.id > 3)
            .unwrap_or(outcomes.len());
        outcomes.insert(pos, outcome);
    }

    for o in &outcomes {
        report.push_row(serde_json::json!({
            "criterion": o.id,
            "name": o.name,
            "passed": o.passed,
            "detail": o.detail,
        }));
    }
    Ok((outcomes, csv, report))
}
