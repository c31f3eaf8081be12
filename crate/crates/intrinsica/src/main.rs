use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intrinsica::fractal::{FractalSpec, ObstacleSet, DEFAULT_RECT_LIMIT};
use intrinsica::geometry::Point;
use intrinsica::io::{
    map_sample_from_csv, obstacles_from_json, obstacles_to_json, parse_point, parse_spec_arg,
    parse_stage_range, path_result_to_json, sig12, slope_substitution_note, sweep_rows_to_csv,
};
use intrinsica::monotone::{delta_infimum, samples, MapSample};
use intrinsica::path::{detour_construct, esp_visibility, removability_sweep};
use intrinsica::rat::{approx_rat, format_rat, parse_rat, Rat};
use intrinsica::report::Report;
use intrinsica::thinness::{claim1_certificate, claim1_sample_lines, cone_reach_feasible, segment_witness};
use intrinsica::{Error, Result};

#[derive(Parser)]
#[command(name = "intrinsica", version, about = "Shortest paths, thinness probes, and monotonicity experiments around fractal obstacle sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SceneArgs {
    /// Obstacle family, e.g. cantor-product:1/3:3 or tabor-grid:7:8:1/32.
    #[arg(long, conflicts_with = "input")]
    spec: Option<String>,
    /// JSON obstacle file ({"rects": ...} or {"spec": ...}).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Maximum explicit rectangle count before erroring (or going implicit
    /// where supported).
    #[arg(long, default_value_t = DEFAULT_RECT_LIMIT)]
    limit: u64,
}

impl SceneArgs {
    fn load(&self) -> Result<ObstacleSet> {
        match (&self.spec, &self.input) {
            (Some(s), None) => ObstacleSet::generate(&parse_spec_arg(s)?, self.limit),
            (None, Some(path)) => obstacles_from_json(&fs::read_to_string(path)?, self.limit),
            _ => Err(Error::InvalidInput("provide exactly one of --spec or --input".into())),
        }
    }

    fn load_auto(&self) -> Result<ObstacleSet> {
        match (&self.spec, &self.input) {
            (Some(s), None) => ObstacleSet::auto(&parse_spec_arg(s)?, self.limit),
            (None, Some(path)) => obstacles_from_json(&fs::read_to_string(path)?, self.limit),
            _ => Err(Error::InvalidInput("provide exactly one of --spec or --input".into())),
        }
    }
}

#[derive(Args)]
struct EndpointArgs {
    /// Start point "x,y" with rational coordinates.
    #[arg(long)]
    from: String,
    /// End point "x,y".
    #[arg(long)]
    to: String,
}

impl EndpointArgs {
    fn parse(&self) -> Result<(Point, Point)> {
        Ok((parse_point(&self.from)?, parse_point(&self.to)?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Expand an obstacle spec and emit the JSON interchange form.
    Generate {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact Euclidean shortest path via the visibility graph.
    Esp {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        endpoints: EndpointArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Constructive perimeter-detour path with its bound.
    Detour {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        endpoints: EndpointArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Removability gaps across stages of a family, as CSV.
    Sweep {
        /// Family without a stage, e.g. cantor-product:1/3 or holey-staircase.
        #[arg(long)]
        family: String,
        /// Stage range "lo:hi".
        #[arg(long)]
        stages: String,
        #[command(flatten)]
        endpoints: EndpointArgs,
        #[arg(long, default_value_t = DEFAULT_RECT_LIMIT)]
        limit: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cone-constrained (Lipschitz-graph) reachability decision.
    Lipthin {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        endpoints: EndpointArgs,
        /// Cone slope tan(eps) as an exact rational.
        #[arg(long, conflicts_with = "angle")]
        slope: Option<String>,
        /// Cone half-angle in radians; substituted by a nearby rational slope.
        #[arg(long)]
        angle: Option<f64>,
    },
    /// Randomized interval-thinness witness search.
    IntervalThin {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        endpoints: EndpointArgs,
        /// Ball radius around each endpoint (rational).
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Blocking certificate and seeded line sweep for the grid family.
    Claim1 {
        /// Level range "min:max".
        #[arg(long)]
        levels: String,
        /// Cell inset parameter (rational).
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 10_000)]
        lines: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Staircase cone-blocking experiment across stages.
    Staircase {
        /// Stage range "lo:hi".
        #[arg(long, default_value = "2:6")]
        stages: String,
        /// Cone slope (rational).
        #[arg(long, default_value = "31/100")]
        slope: String,
        #[command(flatten)]
        endpoints: EndpointArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Delta-monotonicity estimate of a builtin or CSV map sample.
    Monotone {
        /// Builtin name (identity, inv-neg-sector, radial-push,
        /// radial-push-adversarial) or a CSV file path prefixed with '@'.
        #[arg(long)]
        sample: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the acceptance suite.
    Accept {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the CSV body and JSON report.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn family_spec(family: &str, stage: u32) -> Result<FractalSpec> {
    let spec = match family.split(':').collect::<Vec<_>>().as_slice() {
        ["cantor-product", ratio] => {
            FractalSpec::CantorProduct { ratio: parse_rat(ratio)?, stage }
        }
        ["fat-cantor-product", gap] => {
            FractalSpec::FatCantorProduct { total_gap: parse_rat(gap)?, stage }
        }
        ["holey-staircase"] => FractalSpec::HoleyStaircase { stage },
        _ => {
            return Err(Error::InvalidInput(format!(
                "family {family:?}: expected cantor-product:RATIO, fat-cantor-product:GAP, or holey-staircase"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn builtin_sample(name: &str, n: usize, seed: u64) -> Result<MapSample> {
    match name {
        "identity" => samples::identity(n, seed),
        "inv-neg-sector" => samples::inv_neg_sector(n, seed),
        "radial-push" => samples::radial_push(n, seed),
        "radial-push-adversarial" => samples::radial_push_adversarial(0.01),
        _ => Err(Error::InvalidInput(format!("unknown builtin sample {name:?}"))),
    }
}

/// Exit code 1 signals a failed assertion (acceptance), 2 a usage/config
/// problem.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate { scene, output } => {
            let obs = scene.load_auto()?;
            emit(&(obstacles_to_json(&obs)? + "\n"), &output)?;
        }
        Command::Esp { scene, endpoints, output } => {
            let obs = scene.load()?;
            let (a, b) = endpoints.parse()?;
            let res = esp_visibility(&a, &b, &obs)?;
            emit(&(path_result_to_json(&res)? + "\n"), &output)?;
        }
        Command::Detour { scene, endpoints, output } => {
            let obs = scene.load()?;
            let (a, b) = endpoints.parse()?;
            let det = detour_construct(&a, &b, &obs)?;
            let mut text = path_result_to_json(&det.result)?;
            text.push_str(&format!(
                "\nspliced rects: {}; bound |a-b| + perimeters/2 = {}\n",
                det.spliced,
                sig12(
                    det.result.straight_distance
                        + intrinsica::rat::to_f64(&det.intersected_perimeter) / 2.0
                )
            ));
            emit(&text, &output)?;
        }
        Command::Sweep { family, stages, endpoints, limit, output } => {
            let (lo, hi) = parse_stage_range(&stages)?;
            let (a, b) = endpoints.parse()?;
            let specs: Vec<(u32, FractalSpec)> = (lo..=hi)
                .map(|s| Ok((s, family_spec(&family, s)?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = removability_sweep(&specs, &a, &b, limit)?;
            emit(&sweep_rows_to_csv(&rows), &output)?;
        }
        Command::Lipthin { scene, endpoints, slope, angle } => {
            let obs = scene.load()?;
            let (a, b) = endpoints.parse()?;
            let slope: Rat = match (slope, angle) {
                (Some(s), None) => parse_rat(&s)?,
                (None, Some(theta)) => {
                    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
                        return Err(Error::Domain("angle must lie in (0, pi/2)".into()));
                    }
                    let s = approx_rat(theta.tan(), 1_000_000);
                    println!("{}", slope_substitution_note(theta, &s));
                    s
                }
                _ => return Err(Error::InvalidInput("provide exactly one of --slope or --angle".into())),
            };
            let out = cone_reach_feasible(&a, &b, &slope, &obs)?;
            println!("slope,feasible,eventCount");
            println!("{},{},{}", format_rat(&slope), out.feasible, out.events);
            if let Some(poly) = out.polyline {
                let verts: Vec<String> = poly
                    .vertices()
                    .iter()
                    .map(|p| format!("({},{})", format_rat(&p.x), format_rat(&p.y)))
                    .collect();
                println!("polyline: {}", verts.join(" "));
            }
        }
        Command::IntervalThin { scene, endpoints, eps, samples, seed } => {
            let obs = scene.load_auto()?;
            let (a, b) = endpoints.parse()?;
            let rep = segment_witness(&a, &b, &parse_rat(&eps)?, &obs, samples, seed)?;
            println!("found,samples,seed");
            println!("{},{},{}", rep.witness.is_some(), rep.samples, rep.seed);
            if let Some(w) = rep.witness {
                println!(
                    "witness: ({},{}) -> ({},{})",
                    format_rat(&w.p.x),
                    format_rat(&w.p.y),
                    format_rat(&w.q.x),
                    format_rat(&w.q.y)
                );
            }
        }
        Command::Claim1 { levels, delta, lines, seed } => {
            let (min_level, max_level) = parse_stage_range(&levels)?;
            let delta = parse_rat(&delta)?;
            let certificate = claim1_certificate(&delta)?;
            let spec = FractalSpec::TaborGrid { min_level, max_level, delta };
            let out = claim1_sample_lines(&spec, lines, seed, 1000)?;
            if out.shallow_levels {
                eprintln!("warning: certificate argument needs min level >= 7");
            }
            println!("count,allHit,certificate");
            println!("{},{},{}", out.tested, out.all_hit, certificate);
            if let Some(c) = out.counterexample {
                println!(
                    "counterexample: ({},{}) -> ({},{})",
                    format_rat(&c.p.x),
                    format_rat(&c.p.y),
                    format_rat(&c.q.x),
                    format_rat(&c.q.y)
                );
            }
        }
        Command::Staircase { stages, slope, endpoints, output } => {
            let (lo, hi) = parse_stage_range(&stages)?;
            let slope = parse_rat(&slope)?;
            let (a, b) = endpoints.parse()?;
            let mut text = String::from("stage,slope,feasible,eventCount\n");
            for stage in lo..=hi {
                let obs = ObstacleSet::generate(
                    &FractalSpec::HoleyStaircase { stage },
                    DEFAULT_RECT_LIMIT,
                )?;
                let out = cone_reach_feasible(&a, &b, &slope, &obs)?;
                text.push_str(&format!(
                    "{stage},{},{},{}\n",
                    format_rat(&slope),
                    out.feasible,
                    out.events
                ));
            }
            emit(&text, &output)?;
        }
        Command::Monotone { sample, n, seed } => {
            let s = if let Some(path) = sample.strip_prefix('@') {
                map_sample_from_csv(path, &fs::read_to_string(path)?)?
            } else {
                builtin_sample(&sample, n, seed)?
            };
            let e = delta_infimum(&s)?;
            println!("sample,pairs,deltaHat,minInner,degenerate");
            println!(
                "{},{},{},{},{}",
                s.name,
                e.compared,
                sig12(e.delta_hat),
                sig12(e.min_inner),
                e.degenerate
            );
        }
        Command::Accept { seed, output } => {
            let start = std::time::Instant::now();
            let run = intrinsica::acceptance::run_acceptance(seed)?;
            print!("{}", run.summary());
            let mut report: Report = run.report;
            report.wall_ms = Some(start.elapsed().as_secs_f64() * 1000.0);
            if let Some(dir) = output {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("accept.csv"), &run.csv)?;
                fs::write(dir.join("accept.json"), report.to_json())?;
            }
            if !run.passed {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("INTRINSICA_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("error: INTRINSICA_THREADS must be a positive integer");
            return ExitCode::from(2);
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
