//! Epsilon-approximations of the real curve V(F) inside a window.
//!
//! Seeding scans a grid for sign changes of F and bisects each crossing edge
//! onto the curve. Tracing is a tangent predictor with a Newton corrector
//! pulled back along the gradient; the step is curvature-adaptive
//! (h = min(eps/2, 0.2/kappa)) so tight bends are resolved, and a 60-degree
//! turn guard rejects corrector results that jumped to a nearby branch.
//! Chord spacing at most epsilon between consecutive points stands in for
//! the covering definition; covering itself is verified in tests against a
//! much denser oracle sample.
//!
//! Singular points are never discovered here. They must be declared by the
//! caller and are appended to the sample, matching the hypothesis under
//! which Voronoi cells of singular curves converge. Arcs that run into a
//! vanishing gradient stop and record that end as singular.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{BoundingBox, Point, Vec2};
use crate::poly2::{Poly2, ON_CURVE_TOL};

/// Relative gradient threshold below which tracing treats a point as
/// (numerically) singular.
const SINGULAR_TOL: f64 = 1e-9;
const MAX_STEPS_PER_ARC: usize = 400_000;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("curve has no real points in the window")]
    NoRealPoints,
    #[error("seed grid too coarse: {0} (minimum 8)")]
    GridTooCoarse(usize),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("seed point is not on the curve")]
    SeedOffCurve,
    #[error("seed point has vanishing gradient")]
    SeedSingular,
    #[error("no component could be traced from any seed")]
    TraceFailed,
    #[error("Newton iteration did not converge")]
    NoConvergence,
}

/// Why an open arc stopped at one of its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceEnd {
    /// Gradient fell below tolerance: the arc runs into a singular point.
    Singular,
    /// The curve left the window.
    BoxExit,
    /// Step control collapsed without a verdict.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Closed,
    Open { start: TraceEnd, end: TraceEnd },
}

/// One traced arc or loop, ordered along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedComponent {
    pub points: Vec<Point>,
    pub closure: Closure,
}

impl TracedComponent {
    pub fn is_closed(&self) -> bool {
        self.closure == Closure::Closed
    }
}

/// An epsilon-approximation: traced components plus declared singular points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SampleRepr", into = "SampleRepr")]
pub struct Sample {
    pub epsilon: f64,
    pub components: Vec<TracedComponent>,
    pub singular_points: Vec<Point>,
    /// Flattened, deduplicated union of component points and singular points.
    pub all_points: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRepr {
    points: Vec<[f64; 2]>,
    closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    ends: Option<[TraceEnd; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SampleRepr {
    epsilon: f64,
    components: Vec<ComponentRepr>,
    singular: Vec<[f64; 2]>,
}

impl From<Sample> for SampleRepr {
    fn from(s: Sample) -> Self {
        SampleRepr {
            epsilon: s.epsilon,
            components: s
                .components
                .into_iter()
                .map(|c| ComponentRepr {
                    points: c.points.into_iter().map(Into::into).collect(),
                    closed: c.closure == Closure::Closed,
                    ends: match c.closure {
                        Closure::Closed => None,
                        Closure::Open { start, end } => Some([start, end]),
                    },
                })
                .collect(),
            singular: s.singular_points.into_iter().map(Into::into).collect(),
        }
    }
}

impl From<SampleRepr> for Sample {
    fn from(r: SampleRepr) -> Self {
        let components: Vec<TracedComponent> = r
            .components
            .into_iter()
            .map(|c| TracedComponent {
                points: c.points.into_iter().map(Into::into).collect(),
                closure: if c.closed {
                    Closure::Closed
                } else {
                    let [start, end] = c.ends.unwrap_or([TraceEnd::Stalled, TraceEnd::Stalled]);
                    Closure::Open { start, end }
                },
            })
            .collect();
        let singular_points: Vec<Point> = r.singular.into_iter().map(Into::into).collect();
        let all_points = flatten_points(&components, &singular_points);
        Sample { epsilon: r.epsilon, components, singular_points, all_points }
    }
}

fn flatten_points(components: &[TracedComponent], singular: &[Point]) -> Vec<Point> {
    let mut all: Vec<Point> = components
        .iter()
        .flat_map(|c| c.points.iter().copied())
        .chain(singular.iter().copied())
        .collect();
    let diag = BoundingBox::around(&all, 0.0).map(|b| b.diagonal()).unwrap_or(1.0);
    let tol = 1e-9 * diag.max(f64::MIN_POSITIVE);
    all.sort_by(Point::lex_cmp);
    all.dedup_by(|a, b| a.dist(*b) <= tol);
    all
}

fn on_curve(p: &Poly2, q: Point) -> bool {
    p.eval(q).abs() <= ON_CURVE_TOL * p.scale(q).max(f64::MIN_POSITIVE)
}

fn grad_is_singular(p: &Poly2, q: Point, g: Vec2) -> bool {
    g.norm() <= SINGULAR_TOL * p.grad_scale(q).max(f64::MIN_POSITIVE)
}

enum Corrected {
    Ok(Point),
    Singular,
    Fail,
}

/// Pull a predicted point back onto the curve along the gradient.
fn correct(p: &Poly2, start: Point) -> Corrected {
    let mut q = start;
    for _ in 0..16 {
        let f = p.eval(q);
        let scale = p.scale(q).max(f64::MIN_POSITIVE);
        if f.abs() <= 1e-13 * scale {
            return Corrected::Ok(q);
        }
        let g = p.grad(q);
        if grad_is_singular(p, q, g) {
            return Corrected::Singular;
        }
        let g2 = g.norm_sq();
        q = q - g.scale(f / g2);
    }
    if on_curve(p, q) {
        Corrected::Ok(q)
    } else {
        Corrected::Fail
    }
}

fn local_curvature(j: &crate::poly2::Jet2) -> f64 {
    let g2 = j.fx * j.fx + j.fy * j.fy;
    if g2 == 0.0 {
        return 0.0;
    }
    j.curvature_denominator().abs() / g2.powf(1.5)
}

/// Scan the grid for sign changes of F along cell edges and bisect each
/// crossing onto the curve. Grid nodes that already satisfy the on-curve
/// tolerance are kept as-is. Best effort: components thinner than a grid
/// cell can be missed, which is the caller's density trade-off.
pub fn seed_points(
    p: &Poly2,
    window: &BoundingBox,
    grid_n: usize,
) -> Result<Vec<Point>, SamplerError> {
    if grid_n < 8 {
        return Err(SamplerError::GridTooCoarse(grid_n));
    }
    let nx = grid_n + 1;
    let xs: Vec<f64> = (0..nx)
        .map(|i| window.xmin + (window.xmax - window.xmin) * (i as f64) / (grid_n as f64))
        .collect();
    let ys: Vec<f64> = (0..nx)
        .map(|j| window.ymin + (window.ymax - window.ymin) * (j as f64) / (grid_n as f64))
        .collect();
    let mut vals = vec![0.0; nx * nx];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            vals[i * nx + j] = p.eval(Point::new(x, y));
        }
    }
    let mut seeds: Vec<Point> = Vec::new();
    for i in 0..nx {
        for j in 0..nx {
            let v = vals[i * nx + j];
            let a = Point::new(xs[i], ys[j]);
            if v.abs() <= ON_CURVE_TOL * p.scale(a).max(f64::MIN_POSITIVE) {
                seeds.push(a);
                continue;
            }
            // Horizontal and vertical edges leaving this node.
            for (i2, j2) in [(i + 1, j), (i, j + 1)] {
                if i2 >= nx || j2 >= nx {
                    continue;
                }
                let w = vals[i2 * nx + j2];
                if v * w < 0.0 {
                    let b = Point::new(xs[i2], ys[j2]);
                    if let Some(root) = bisect(p, a, v, b) {
                        seeds.push(root);
                    }
                }
            }
        }
    }
    let diag = window.diagonal();
    seeds.sort_by(Point::lex_cmp);
    seeds.dedup_by(|a, b| a.dist(*b) <= 1e-12 * diag);
    if seeds.is_empty() {
        return Err(SamplerError::NoRealPoints);
    }
    Ok(seeds)
}

fn bisect(p: &Poly2, mut a: Point, mut fa: f64, mut b: Point) -> Option<Point> {
    for _ in 0..80 {
        let m = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        if on_curve(p, m) {
            return Some(m);
        }
        let fm = p.eval(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let m = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    on_curve(p, m).then_some(m)
}

struct DirectionTrace {
    points: Vec<Point>,
    outcome: DirOutcome,
}

enum DirOutcome {
    Closed,
    Ended(TraceEnd),
}

fn trace_direction(
    p: &Poly2,
    seed: Point,
    seed_tangent: Vec2,
    sign: f64,
    epsilon: f64,
    window: &BoundingBox,
) -> DirectionTrace {
    let mut points = vec![seed];
    let mut cur = seed;
    let mut prev_dir = seed_tangent.scale(sign);
    let start_dir = prev_dir;
    // Largest gradient magnitude seen along this arc. Relative to it the
    // gradient collapsing by many orders of magnitude marks an approach to
    // a singular point; the pointwise scale cannot tell, since it vanishes
    // together with the gradient there.
    let mut grad_ref = p.grad(seed).norm();
    let classify_stall = |p: &Poly2, cur: Point, grad_ref: f64| {
        if p.grad(cur).norm() <= 1e-5 * grad_ref {
            TraceEnd::Singular
        } else {
            TraceEnd::Stalled
        }
    };
    for step_count in 0..MAX_STEPS_PER_ARC {
        let j = p.jet(cur);
        let g = Vec2::new(j.fx, j.fy);
        if grad_is_singular(p, cur, g) || g.norm() <= 1e-5 * grad_ref {
            return DirectionTrace { points, outcome: DirOutcome::Ended(TraceEnd::Singular) };
        }
        grad_ref = grad_ref.max(g.norm());
        let tangent = Vec2::new(-j.fy, j.fx).normalized();
        let dir = if tangent.dot(prev_dir) >= 0.0 { tangent } else { -tangent };
        let kappa = local_curvature(&j);
        let mut h = if kappa > 0.0 {
            (epsilon / 2.0).min(0.2 / kappa)
        } else {
            epsilon / 2.0
        };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let predicted = cur + dir.scale(h);
            match correct(p, predicted) {
                Corrected::Ok(q) => {
                    let chord = q.dist(cur);
                    if chord > epsilon || chord < 1e-4 * h || q.dist(predicted) > h {
                        h /= 2.0;
                        continue;
                    }
                    let jq = p.jet(q);
                    let gq = Vec2::new(jq.fx, jq.fy);
                    if grad_is_singular(p, q, gq) {
                        return DirectionTrace {
                            points,
                            outcome: DirOutcome::Ended(TraceEnd::Singular),
                        };
                    }
                    let tq = Vec2::new(-jq.fy, jq.fx).normalized();
                    let tq = if tq.dot(dir) >= 0.0 { tq } else { -tq };
                    // Branch-jump guard: reject turns sharper than 60 degrees.
                    if tq.dot(dir) < 0.5 {
                        h /= 2.0;
                        continue;
                    }
                    accepted = Some((q, tq));
                    break;
                }
                Corrected::Singular => {
                    return DirectionTrace {
                        points,
                        outcome: DirOutcome::Ended(TraceEnd::Singular),
                    };
                }
                Corrected::Fail => {
                    h /= 2.0;
                }
            }
        }
        let Some((q, tq)) = accepted else {
            let end = classify_stall(p, cur, grad_ref);
            return DirectionTrace { points, outcome: DirOutcome::Ended(end) };
        };
        if !window.contains(q) {
            return DirectionTrace { points, outcome: DirOutcome::Ended(TraceEnd::BoxExit) };
        }
        if step_count >= 3 && q.dist(seed) <= epsilon / 2.0 && tq.dot(start_dir) > 0.0 {
            return DirectionTrace { points, outcome: DirOutcome::Closed };
        }
        points.push(q);
        cur = q;
        prev_dir = tq;
    }
    let end = classify_stall(p, cur, grad_ref);
    DirectionTrace { points, outcome: DirOutcome::Ended(end) }
}

/// Trace the connected component through `seed` with chord spacing at most
/// `epsilon`. Closed loops are detected by returning to the seed with a
/// consistent direction; open arcs stop at the window or at singularities,
/// recording the reason per end.
pub fn trace_component(
    p: &Poly2,
    seed: Point,
    epsilon: f64,
    window: &BoundingBox,
) -> Result<TracedComponent, SamplerError> {
    if epsilon <= 0.0 {
        return Err(SamplerError::BadEpsilon(epsilon));
    }
    let seed = match correct(p, seed) {
        Corrected::Ok(q) => q,
        Corrected::Singular => return Err(SamplerError::SeedSingular),
        Corrected::Fail => return Err(SamplerError::SeedOffCurve),
    };
    if !on_curve(p, seed) {
        return Err(SamplerError::SeedOffCurve);
    }
    let g = p.grad(seed);
    if grad_is_singular(p, seed, g) {
        return Err(SamplerError::SeedSingular);
    }
    let tangent = Vec2::new(-g.y, g.x).normalized();
    let fwd = trace_direction(p, seed, tangent, 1.0, epsilon, window);
    if let DirOutcome::Closed = fwd.outcome {
        return Ok(TracedComponent { points: fwd.points, closure: Closure::Closed });
    }
    let bwd = trace_direction(p, seed, tangent, -1.0, epsilon, window);
    let DirOutcome::Ended(end_fwd) = fwd.outcome else { unreachable!() };
    let end_bwd = match bwd.outcome {
        DirOutcome::Ended(e) => e,
        // Closing only one way means the loop shrank below resolution;
        // treat the backward end as stalled rather than closed.
        DirOutcome::Closed => TraceEnd::Stalled,
    };
    let mut points: Vec<Point> = bwd.points[1..].iter().rev().copied().collect();
    points.extend(fwd.points);
    Ok(TracedComponent {
        points,
        closure: Closure::Open { start: end_bwd, end: end_fwd },
    })
}

/// Options for [`epsilon_sample_with`]; `Default` matches `epsilon_sample`.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub grid_n: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { grid_n: 64 }
    }
}

/// Epsilon-approximation of V(F) in the window: traced components from grid
/// seeds plus the declared singular points.
pub fn epsilon_sample(
    p: &Poly2,
    window: &BoundingBox,
    epsilon: f64,
    singular_points: &[Point],
) -> Result<Sample, SamplerError> {
    epsilon_sample_with(p, window, epsilon, singular_points, SampleOptions::default())
}

pub fn epsilon_sample_with(
    p: &Poly2,
    window: &BoundingBox,
    epsilon: f64,
    singular_points: &[Point],
    opts: SampleOptions,
) -> Result<Sample, SamplerError> {
    if epsilon <= 0.0 {
        return Err(SamplerError::BadEpsilon(epsilon));
    }
    let seeds = seed_points(p, window, opts.grid_n)?;
    let mut components: Vec<TracedComponent> = Vec::new();
    let mut failures = 0;
    for seed in &seeds {
        let covered = components
            .iter()
            .any(|c| c.points.iter().any(|q| q.dist(*seed) <= 0.75 * epsilon));
        if covered {
            continue;
        }
        match trace_component(p, *seed, epsilon, window) {
            Ok(c) => components.push(c),
            Err(_) => failures += 1,
        }
    }
    if components.is_empty() && singular_points.is_empty() {
        return Err(if failures > 0 {
            SamplerError::TraceFailed
        } else {
            SamplerError::NoRealPoints
        });
    }
    let singular_points = singular_points.to_vec();
    let all_points = flatten_points(&components, &singular_points);
    Ok(Sample { epsilon, components, singular_points, all_points })
}

/// Bisect epsilon until the sample size lands as close as possible to a
/// target point count. Sizes move in steps, so the hit is approximate; the
/// best size seen is returned.
pub fn epsilon_for_point_count(
    p: &Poly2,
    window: &BoundingBox,
    target: usize,
    singular_points: &[Point],
    opts: SampleOptions,
) -> Result<Sample, SamplerError> {
    let mut lo: f64 = 1e-4 * window.diagonal();
    let mut hi: f64 = window.diagonal();
    let mut best: Option<Sample> = None;
    for _ in 0..48 {
        let eps = (lo * hi).sqrt();
        let s = epsilon_sample_with(p, window, eps, singular_points, opts)?;
        let n = s.all_points.len();
        if best
            .as_ref()
            .map_or(true, |b| n.abs_diff(target) < b.all_points.len().abs_diff(target))
        {
            best = Some(s);
        }
        if n == target {
            break;
        }
        if n > target {
            lo = eps;
        } else {
            hi = eps;
        }
    }
    best.ok_or(SamplerError::NoRealPoints)
}

/// Newton-project a nearby point onto the curve along the gradient.
pub fn project_to_curve(p: &Poly2, q: Point) -> Option<Point> {
    match correct(p, q) {
        Corrected::Ok(r) => Some(r),
        _ => None,
    }
}

/// Halve a sample's spacing by inserting the corrected chord midpoint
/// between consecutive points of every component. The result is a nested
/// epsilon-approximation (the old points survive verbatim), which keeps
/// convergence measurements across a halving sequence correlated instead of
/// re-rolling the sample distribution at every level.
pub fn refine_sample(p: &Poly2, s: &Sample) -> Sample {
    let mut components = Vec::with_capacity(s.components.len());
    let mut max_chord: f64 = 0.0;
    for comp in &s.components {
        let pts = &comp.points;
        let mut refined = Vec::with_capacity(pts.len() * 2);
        let pairs = if comp.is_closed() { pts.len() } else { pts.len() - 1 };
        for i in 0..pts.len() {
            refined.push(pts[i]);
            if i >= pairs {
                continue;
            }
            let j = (i + 1) % pts.len();
            let mid = Point::new(
                (pts[i].x + pts[j].x) / 2.0,
                (pts[i].y + pts[j].y) / 2.0,
            );
            if let Corrected::Ok(m) = correct(p, mid) {
                // Keep the midpoint only if it actually subdivides the gap.
                let gap = pts[i].dist(pts[j]);
                if m.dist(pts[i]) < gap && m.dist(pts[j]) < gap {
                    max_chord = max_chord.max(m.dist(pts[i])).max(m.dist(pts[j]));
                    refined.push(m);
                    continue;
                }
            }
            max_chord = max_chord.max(pts[i].dist(pts[j]));
        }
        components.push(TracedComponent { points: refined, closure: comp.closure });
    }
    let epsilon = (s.epsilon / 2.0).max(max_chord);
    let all_points = flatten_points(&components, &s.singular_points);
    Sample {
        epsilon,
        components,
        singular_points: s.singular_points.clone(),
        all_points,
    }
}

/// Foot point of `probe` on the curve: Newton on {F(q) = 0,
/// (probe - q) x grad F(q) = 0} from a nearby seed. The second equation
/// forces probe - q parallel to the normal.
pub fn nearest_point_on_curve(
    p: &Poly2,
    probe: Point,
    seed: Point,
) -> Result<Point, SamplerError> {
    let mut q = seed;
    let mut best_norm = f64::INFINITY;
    for _ in 0..50 {
        let j = p.jet(q);
        let g = Vec2::new(j.fx, j.fy);
        let v = probe - q;
        let r1 = j.f;
        let r2 = v.cross(g);
        let s1 = p.scale(q).max(f64::MIN_POSITIVE);
        let s2 = ((1.0 + v.norm()) * p.grad_scale(q)).max(f64::MIN_POSITIVE);
        if r1.abs() <= 1e-10 * s1 && r2.abs() <= 1e-10 * s2 {
            return Ok(q);
        }
        // Jacobian of (r1, r2); grad F depends on q.
        let a11 = j.fx;
        let a12 = j.fy;
        let a21 = -j.fy + v.x * j.fxy - v.y * j.fxx;
        let a22 = j.fx + v.x * j.fyy - v.y * j.fxy;
        let det = a11 * a22 - a12 * a21;
        if det.abs() < 1e-300 {
            return Err(SamplerError::NoConvergence);
        }
        let dx = (r1 * a22 - r2 * a12) / det;
        let dy = (a11 * r2 - a21 * r1) / det;
        let norm = r1.abs() / s1 + r2.abs() / s2;
        if norm > 4.0 * best_norm && best_norm.is_finite() {
            return Err(SamplerError::NoConvergence);
        }
        best_norm = best_norm.min(norm);
        q = Point::new(q.x - dx, q.y - dy);
    }
    Err(SamplerError::NoConvergence)
}
