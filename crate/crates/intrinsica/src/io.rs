//! Interchange formats: JSON obstacle sets and path results with rationals as
//! "p/q" strings, CSV emission for sweeps, and CLI argument parsing helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{FractalSpec, ObstacleSet};
use crate::geometry::{AxisRect, Point, Vec2};
use crate::monotone::MapSample;
use crate::path::{PathResult, SweepRow};
use crate::rat::{format_rat, parse_rat, Rat};

/// Formats a float with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".into();
    }
    format!("{x:.11e}")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleDto {
    #[serde(skip_serializing_if = "Option::is_none")]
    rects: Option<Vec<[String; 4]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<SpecDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum SpecDto {
    CantorProduct {
        ratio: String,
        stage: u32,
    },
    FatCantorProduct {
        #[serde(rename = "totalGap")]
        total_gap: String,
        stage: u32,
    },
    HoleyStaircase {
        stage: u32,
    },
    TaborGrid {
        #[serde(rename = "minLevel")]
        min_level: u32,
        #[serde(rename = "maxLevel")]
        max_level: u32,
        delta: String,
    },
    CustomRects {
        rects: Vec<[String; 4]>,
    },
}

fn rect_to_strings(r: &AxisRect) -> [String; 4] {
    [format_rat(&r.x0), format_rat(&r.y0), format_rat(&r.x1), format_rat(&r.y1)]
}

fn rect_from_strings(v: &[String; 4]) -> Result<AxisRect> {
    AxisRect::new(parse_rat(&v[0])?, parse_rat(&v[1])?, parse_rat(&v[2])?, parse_rat(&v[3])?)
}

fn spec_to_dto(spec: &FractalSpec) -> SpecDto {
    match spec {
        FractalSpec::CantorProduct { ratio, stage } => {
            SpecDto::CantorProduct { ratio: format_rat(ratio), stage: *stage }
        }
        FractalSpec::FatCantorProduct { total_gap, stage } => {
            SpecDto::FatCantorProduct { total_gap: format_rat(total_gap), stage: *stage }
        }
        FractalSpec::HoleyStaircase { stage } => SpecDto::HoleyStaircase { stage: *stage },
        FractalSpec::TaborGrid { min_level, max_level, delta } => SpecDto::TaborGrid {
            min_level: *min_level,
            max_level: *max_level,
            delta: format_rat(delta),
        },
        FractalSpec::CustomRects(rects) => {
            SpecDto::CustomRects { rects: rects.iter().map(rect_to_strings).collect() }
        }
    }
}

fn spec_from_dto(dto: &SpecDto) -> Result<FractalSpec> {
    let spec = match dto {
        SpecDto::CantorProduct { ratio, stage } => {
            FractalSpec::CantorProduct { ratio: parse_rat(ratio)?, stage: *stage }
        }
        SpecDto::FatCantorProduct { total_gap, stage } => {
            FractalSpec::FatCantorProduct { total_gap: parse_rat(total_gap)?, stage: *stage }
        }
        SpecDto::HoleyStaircase { stage } => FractalSpec::HoleyStaircase { stage: *stage },
        SpecDto::TaborGrid { min_level, max_level, delta } => FractalSpec::TaborGrid {
            min_level: *min_level,
            max_level: *max_level,
            delta: parse_rat(delta)?,
        },
        SpecDto::CustomRects { rects } => FractalSpec::CustomRects(
            rects.iter().map(rect_from_strings).collect::<Result<Vec<_>>>()?,
        ),
    };
    spec.validate()?;
    Ok(spec)
}

/// Serializes an obstacle set: explicit sets as a rectangle list, implicit
/// ones as their spec.
pub fn obstacles_to_json(obs: &ObstacleSet) -> Result<String> {
    let dto = if obs.is_explicit() {
        ObstacleDto {
            rects: Some(obs.rects()?.iter().map(rect_to_strings).collect()),
            spec: None,
        }
    } else {
        ObstacleDto {
            rects: None,
            spec: Some(spec_to_dto(obs.spec().expect("implicit sets carry a spec"))),
        }
    };
    Ok(serde_json::to_string_pretty(&dto)?)
}

/// Parses the obstacle interchange format; explicit rectangle lists are
/// validated for pairwise disjointness, spec payloads are expanded up to
/// `limit` rectangles (falling back to the implicit handle).
pub fn obstacles_from_json(text: &str, limit: u64) -> Result<ObstacleSet> {
    let dto: ObstacleDto = serde_json::from_str(text)?;
    match (dto.rects, dto.spec) {
        (Some(rects), None) => ObstacleSet::from_rects(
            rects.iter().map(rect_from_strings).collect::<Result<Vec<_>>>()?,
        ),
        (None, Some(spec)) => ObstacleSet::auto(&spec_from_dto(&spec)?, limit),
        _ => Err(Error::InvalidInput(
            "obstacle JSON must contain exactly one of \"rects\" or \"spec\"".into(),
        )),
    }
}

pub fn spec_to_json(spec: &FractalSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::json!({ "spec": spec_to_dto(spec) }))?)
}

/// Emits a path result as JSON: float length/gap (12 significant digits) plus
/// exact vertices.
pub fn path_result_to_json(r: &PathResult) -> Result<String> {
    let vertices: Vec<[String; 2]> = r
        .path
        .vertices()
        .iter()
        .map(|p| [format_rat(&p.x), format_rat(&p.y)])
        .collect();
    let value = serde_json::json!({
        "length": sig12(r.length),
        "straightDistance": sig12(r.straight_distance),
        "gap": sig12(r.gap),
        "vertices": vertices,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

/// Compact CLI spec syntax:
/// `cantor-product:RATIO:STAGE`, `fat-cantor-product:GAP:STAGE`,
/// `holey-staircase:STAGE`, `tabor-grid:MIN:MAX:DELTA`.
pub fn parse_spec_arg(s: &str) -> Result<FractalSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |msg: &str| Error::InvalidInput(format!("spec {s:?}: {msg}"));
    let stage = |t: &str| -> Result<u32> {
        t.parse().map_err(|_| bad("stage must be a nonnegative integer"))
    };
    let spec = match parts.as_slice() {
        ["cantor-product", ratio, n] => {
            FractalSpec::CantorProduct { ratio: parse_rat(ratio)?, stage: stage(n)? }
        }
        ["fat-cantor-product", gap, n] => {
            FractalSpec::FatCantorProduct { total_gap: parse_rat(gap)?, stage: stage(n)? }
        }
        ["holey-staircase", n] => FractalSpec::HoleyStaircase { stage: stage(n)? },
        ["tabor-grid", min, max, delta] => FractalSpec::TaborGrid {
            min_level: stage(min)?,
            max_level: stage(max)?,
            delta: parse_rat(delta)?,
        },
        _ => return Err(bad("unknown family or wrong arity")),
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses "x,y" with rational components.
pub fn parse_point(s: &str) -> Result<Point> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidInput(format!("point {s:?} must be \"x,y\"")))?;
    Ok(Point::new(parse_rat(x)?, parse_rat(y)?))
}

/// Parses "lo:hi" stage ranges.
pub fn parse_stage_range(s: &str) -> Result<(u32, u32)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("range {s:?} must be \"lo:hi\"")))?;
    let lo: u32 = lo.parse().map_err(|_| Error::InvalidInput(format!("bad range {s:?}")))?;
    let hi: u32 = hi.parse().map_err(|_| Error::InvalidInput(format!("bad range {s:?}")))?;
    if lo > hi {
        return Err(Error::InvalidInput(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

pub const SWEEP_CSV_HEADER: &str = "stage,rects,length,gap,boundH1,lemmaBound,ratio";

pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.stage,
            r.rects,
            sig12(r.length),
            sig12(r.gap),
            sig12(r.bound_h1),
            sig12(r.lemma_bound),
            sig12(r.ratio)
        ));
    }
    out
}

/// Parses a map sample from CSV rows `x1,x2,f1,f2` (header optional).
pub fn map_sample_from_csv(name: &str, text: &str) -> Result<MapSample> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("x1")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "sample line {}: expected 4 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let mut vals = [0f64; 4];
        for (i, c) in cols.iter().enumerate() {
            vals[i] = c.parse().map_err(|_| {
                Error::InvalidInput(format!("sample line {}: bad number {c:?}", lineno + 1))
            })?;
        }
        pairs.push((Vec2::new(vals[0], vals[1]), Vec2::new(vals[2], vals[3])));
    }
    MapSample::new(name, pairs)
}

pub fn map_sample_to_csv(s: &MapSample) -> String {
    let mut out = String::from("x1,x2,f1,f2\n");
    for (x, fx) in &s.pairs {
        out.push_str(&format!("{},{},{},{}\n", sig12(x.x), sig12(x.y), sig12(fx.x), sig12(fx.y)));
    }
    out
}

/// Echo line for the angle-to-slope substitution done for exact sweeps.
pub fn slope_substitution_note(angle: f64, slope: &Rat) -> String {
    format!(
        "note: angle {} substituted by rational slope {} (tan, denominator <= 1e6)",
        sig12(angle),
        format_rat(slope)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::DEFAULT_RECT_LIMIT;
    use crate::rat::{rat, rat_int};

    #[test]
    fn obstacle_json_roundtrip_explicit() {
        let obs = ObstacleSet::from_rects(vec![
            AxisRect::new(rat_int(0), rat_int(0), rat(1, 3), rat(1, 3)).unwrap(),
            AxisRect::new(rat(2, 3), rat_int(0), rat_int(1), rat(1, 3)).unwrap(),
        ])
        .unwrap();
        let text = obstacles_to_json(&obs).unwrap();
        let back = obstacles_from_json(&text, DEFAULT_RECT_LIMIT).unwrap();
        assert_eq!(back.rects().unwrap(), obs.rects().unwrap());
    }

    #[test]
    fn obstacle_json_roundtrip_spec() {
        let spec = FractalSpec::TaborGrid { min_level: 7, max_level: 8, delta: rat(1, 32) };
        let obs = ObstacleSet::auto(&spec, 1000).unwrap();
        assert!(!obs.is_explicit());
        let text = obstacles_to_json(&obs).unwrap();
        let back = obstacles_from_json(&text, 1000).unwrap();
        assert_eq!(back.spec(), obs.spec());
    }

    #[test]
    fn obstacle_json_rejects_overlap_and_ambiguity() {
        let overlapping = r#"{"rects": [["0","0","1","1"], ["1/2","1/2","2","2"]]}"#;
        assert!(obstacles_from_json(overlapping, DEFAULT_RECT_LIMIT).is_err());
        assert!(obstacles_from_json("{}", DEFAULT_RECT_LIMIT).is_err());
    }

    #[test]
    fn spec_arg_syntax() {
        assert!(matches!(
            parse_spec_arg("cantor-product:1/3:3").unwrap(),
            FractalSpec::CantorProduct { .. }
        ));
        assert!(matches!(
            parse_spec_arg("fat-cantor-product:0.08:4").unwrap(),
            FractalSpec::FatCantorProduct { .. }
        ));
        assert!(matches!(
            parse_spec_arg("tabor-grid:7:8:1/32").unwrap(),
            FractalSpec::TaborGrid { .. }
        ));
        assert!(parse_spec_arg("cantor-product:2/3:3").is_err()); // ratio >= 1/2
        assert!(parse_spec_arg("nonsense").is_err());
    }

    #[test]
    fn point_and_range_parsing() {
        let p = parse_point("1/2,-3").unwrap();
        assert_eq!(p.x, rat(1, 2));
        assert_eq!(p.y, rat_int(-3));
        assert!(parse_point("1").is_err());
        assert_eq!(parse_stage_range("1:5").unwrap(), (1, 5));
        assert!(parse_stage_range("5:1").is_err());
    }

    #[test]
    fn sig12_has_twelve_digits() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(sig12(0.0), "0.00000000000e0");
    }

    #[test]
    fn map_sample_csv_roundtrip() {
        let s = crate::monotone::samples::identity(5, 1).unwrap();
        let text = map_sample_to_csv(&s);
        let back = map_sample_from_csv("identity", &text).unwrap();
        assert_eq!(back.pairs.len(), s.pairs.len());
    }
}
