//! curvelab: metric features of implicit plane algebraic curves.
//!
//! Subcommands mirror the library pipeline: `sample` traces the curve,
//! `voronoi` builds the Delaunay/Voronoi structures, `features` classifies
//! edges and extracts medial/bottleneck features, `solve` refines the exact
//! polynomial systems, `reach` combines everything into a reach report,
//! `converge` runs the epsilon-halving harness, and `render` draws layered
//! SVG pictures.
//!
//! Exit codes: 0 clean, 2 finished with warnings, 1 error.

mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use curvelab::delaunay::{delaunay_triangulate, voronoi_dual, Triangulation, VoronoiDiagram};
use curvelab::features::{
    bottleneck_candidates, classify_edges, default_delta, estimate_curvature_local,
    medial_axis_circumcenters, medial_axis_short_edges,
};
use curvelab::geom::{BoundingBox, Point};
use curvelab::poly2::{parse_poly, Poly2};
use curvelab::reach::{convergence_experiment, reach_exact, tracker_at_foot, WijsmanTracker};
use curvelab::sampler::{
    epsilon_for_point_count, epsilon_sample_with, Sample, SampleOptions,
};
use curvelab::solver::{real_bottlenecks, real_critical_curvature, singular_points};

#[derive(Parser)]
#[command(name = "curvelab", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace an epsilon-approximation of the curve.
    Sample(SampleArgs),
    /// Delaunay triangulation and Voronoi diagram of a sample.
    Voronoi(SampleArgs),
    /// Edge classes, medial approximations, candidates, curvature estimates.
    Features(FeaturesArgs),
    /// Newton-refined singular points, critical curvature, and bottlenecks.
    Solve(SampleArgs),
    /// Reach three ways: exact formula and both estimators.
    Reach(SampleArgs),
    /// Convergence experiment over an epsilon-halving sequence.
    Converge(ConvergeArgs),
    /// Layered SVG rendering of the sample and its derived structures.
    Render(RenderArgs),
}

#[derive(Args, Clone)]
struct CurveArgs {
    /// Polynomial in x and y, e.g. "x^2 + y^2 - 1".
    #[arg(long, conflicts_with = "curve_file")]
    curve: Option<String>,
    /// File containing the polynomial expression.
    #[arg(long)]
    curve_file: Option<PathBuf>,
    /// Window as x0 x1 y0 y1.
    #[arg(long = "box", num_args = 4, value_names = ["X0", "X1", "Y0", "Y1"],
          allow_negative_numbers = true, default_values_t = [-3.0, 3.0, -3.0, 3.0])]
    window: Vec<f64>,
    /// Chord spacing of the sample.
    #[arg(long, conflicts_with = "points")]
    eps: Option<f64>,
    /// Target sample size (epsilon found by bisection).
    #[arg(long)]
    points: Option<usize>,
    /// Singular point "x,y" to append to the sample (repeatable).
    #[arg(long = "singular", value_parser = parse_point)]
    singular: Vec<Point>,
    /// Seed grid resolution.
    #[arg(long, default_value_t = 64)]
    seed_grid: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Localization radius for curvature estimates (default per-site).
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Coarsest epsilon of the halving sequence.
    #[arg(long, default_value_t = 0.4)]
    eps0: f64,
    /// Number of halvings (at most 6).
    #[arg(long, default_value_t = 4)]
    halvings: usize,
    /// Wijsman probe "x,y" (repeatable); anchored at its curve foot point.
    #[arg(long = "probe", value_parser = parse_point)]
    probes: Vec<Point>,
    /// Output format.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Comma-separated layers: curve, points, delaunay, voronoi, edges,
    /// medial, circumcenters, candidates, bottlenecks, critical, evolute.
    #[arg(long, default_value = "curve,points,voronoi")]
    layers: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"x,y\", got {s:?}"));
    }
    let x: f64 = parts[0].trim().parse().map_err(|e| format!("bad x: {e}"))?;
    let y: f64 = parts[1].trim().parse().map_err(|e| format!("bad y: {e}"))?;
    Ok(Point::new(x, y))
}

struct Prepared {
    poly: Poly2,
    window: BoundingBox,
    sample: Sample,
}

fn prepare(args: &CurveArgs) -> Result<Prepared> {
    let text = match (&args.curve, &args.curve_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?,
        (None, None) => bail!("one of --curve or --curve-file is required"),
    };
    let poly = parse_poly(text.trim()).map_err(|e| anyhow!("parsing curve: {e}"))?;
    let window = BoundingBox::new(args.window[0], args.window[1], args.window[2], args.window[3]);
    let opts = SampleOptions { grid_n: args.seed_grid };
    let sample = match (args.eps, args.points) {
        (Some(eps), _) => epsilon_sample_with(&poly, &window, eps, &args.singular, opts)?,
        (None, Some(target)) => {
            epsilon_for_point_count(&poly, &window, target, &args.singular, opts)?
        }
        (None, None) => epsilon_sample_with(&poly, &window, 0.05, &args.singular, opts)?,
    };
    Ok(Prepared { poly, window, sample })
}

#[derive(Serialize)]
struct Artifact<T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    payload: T,
}

fn emit<T: Serialize>(out: &OutArgs, schema: &'static str, payload: T) -> Result<()> {
    let artifact = Artifact { schema, payload };
    let json = serde_json::to_string_pretty(&artifact)?;
    write_output(out, json.as_bytes())
}

fn write_output(out: &OutArgs, bytes: &[u8]) -> Result<()> {
    match &out.out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                lock.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VoronoiArtifact {
    triangulation: Triangulation,
    voronoi: VoronoiDiagram,
}

#[derive(Serialize)]
struct FeatureReport {
    epsilon: f64,
    sample_size: usize,
    cell_warnings: Vec<usize>,
    edges: Vec<curvelab::delaunay::VorEdge>,
    short_edges: Vec<(Point, Point)>,
    circumcenters: Vec<curvelab::features::Circumcenter>,
    candidates: Vec<curvelab::features::BottleneckCandidate>,
    curvature_estimates: Vec<CurvatureEstimate>,
}

#[derive(Serialize)]
struct CurvatureEstimate {
    site: usize,
    point: Point,
    delta: f64,
    radius: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    singular_points: Vec<Point>,
    critical: curvelab::solver::CriticalCurvature,
    bottlenecks: curvelab::solver::Bottlenecks,
}

fn run() -> Result<u8> {
    if let Ok(threads) = std::env::var("METRIC_CURVE_LAB_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| anyhow!("METRIC_CURVE_LAB_THREADS must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let cli = Cli::try_parse().map_err(|e| anyhow!("{e}"))?;
    match cli.command {
        Command::Sample(args) => {
            let prepared = prepare(&args.curve)?;
            emit(&args.out, "curvelab/sample/v1", &prepared.sample)?;
            Ok(0)
        }
        Command::Voronoi(args) => {
            let prepared = prepare(&args.curve)?;
            let t = delaunay_triangulate(&prepared.sample.all_points)?;
            let v = voronoi_dual(&t);
            emit(&args.out, "curvelab/voronoi/v1", VoronoiArtifact { triangulation: t, voronoi: v })?;
            Ok(0)
        }
        Command::Features(args) => {
            let prepared = prepare(&args.curve)?;
            let t = delaunay_triangulate(&prepared.sample.all_points)?;
            let mut v = voronoi_dual(&t);
            let classes = classify_edges(&v, &prepared.poly);
            v.set_classes(&classes.classes);
            let short_edges = medial_axis_short_edges(&v, &classes, &prepared.window);
            let circumcenters = medial_axis_circumcenters(&t);
            let candidates = bottleneck_candidates(&v, &classes);
            let curvature_estimates = (0..t.sites.len())
                .map(|site| {
                    let p = t.sites[site];
                    let delta = args.delta.unwrap_or_else(|| default_delta(&t, p));
                    CurvatureEstimate {
                        site,
                        point: p,
                        delta,
                        radius: estimate_curvature_local(&prepared.sample, p, delta).ok(),
                    }
                })
                .collect();
            let warnings = classes.cell_warnings.clone();
            emit(
                &args.out,
                "curvelab/features/v1",
                FeatureReport {
                    epsilon: prepared.sample.epsilon,
                    sample_size: prepared.sample.all_points.len(),
                    cell_warnings: classes.cell_warnings,
                    edges: v.edges.clone(),
                    short_edges,
                    circumcenters,
                    candidates,
                    curvature_estimates,
                },
            )?;
            Ok(if warnings.is_empty() { 0 } else { 2 })
        }
        Command::Solve(args) => {
            let prepared = prepare(&args.curve)?;
            let sings = singular_points(&prepared.poly, &prepared.window);
            let critical = real_critical_curvature(&prepared.poly, &prepared.sample)?;
            let bottlenecks = real_bottlenecks(&prepared.poly, &prepared.sample, None);
            let warned = !critical.warnings.is_empty() || !bottlenecks.warnings.is_empty();
            emit(
                &args.out,
                "curvelab/solve/v1",
                SolveReport { singular_points: sings, critical, bottlenecks },
            )?;
            Ok(if warned { 2 } else { 0 })
        }
        Command::Reach(args) => {
            let prepared = prepare(&args.curve)?;
            let report = reach_exact(&prepared.poly, &prepared.sample)?;
            let warned = !report.warnings.is_empty();
            emit(&args.out, "curvelab/reach/v1", &report)?;
            Ok(if warned { 2 } else { 0 })
        }
        Command::Converge(args) => {
            let prepared = prepare(&args.curve)?;
            let probes = if args.probes.is_empty() {
                vec![Point::new(0.0, 0.5), Point::new(0.5, 0.0)]
            } else {
                args.probes.clone()
            };
            let trackers: Vec<WijsmanTracker> = probes
                .iter()
                .map(|p| tracker_at_foot(&prepared.poly, &prepared.sample, *p))
                .collect::<Result<_, _>>()?;
            let rows = convergence_experiment(
                &prepared.poly,
                &prepared.window,
                args.eps0,
                args.halvings,
                &trackers,
                2,
            )?;
            if args.format == "csv" {
                let mut csv = String::new();
                csv.push_str("epsilon,sample_size");
                for j in 0..trackers.len() {
                    csv.push_str(&format!(",wijsman_{j}"));
                }
                csv.push_str(",triangle_hausdorff_to_next,medial_hausdorff_to_next\n");
                for row in &rows {
                    csv.push_str(&format!("{},{}", row.epsilon, row.sample_size));
                    for w in &row.wijsman {
                        csv.push_str(&format!(",{w}"));
                    }
                    let fmt_opt =
                        |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    csv.push_str(&format!(
                        ",{},{}\n",
                        fmt_opt(row.triangle_hausdorff_to_next),
                        fmt_opt(row.medial_hausdorff_to_next)
                    ));
                }
                write_output(&args.out, csv.as_bytes())?;
            } else {
                emit(&args.out, "curvelab/converge/v1", serde_json::json!({ "rows": rows }))?;
            }
            Ok(0)
        }
        Command::Render(args) => {
            let prepared = prepare(&args.curve)?;
            let svg = render::render(
                &prepared.poly,
                &prepared.window,
                &prepared.sample,
                &args.layers,
            )?;
            write_output(&args.out, svg.as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
