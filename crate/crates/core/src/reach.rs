//! Reach of a smooth compact curve, three ways, and the convergence harness
//! that watches sample-based structures approach their continuous limits.
//!
//! The exact route takes q (minimum radius of curvature) from the critical
//! curvature solver and rho (narrowest bottleneck width) from the bottleneck
//! solver, with tau = min(q, rho/2). The Voronoi estimator localizes a
//! curvature estimate at every site and caps it with half the narrowest
//! bottleneck-candidate width; the Delaunay estimator takes the smallest
//! distance from any circumcenter to the sample. Hausdorff distances over
//! point/segment soups and Wijsman distances (pointwise distances to convex
//! cells) quantify convergence across an epsilon-halving sequence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delaunay::{delaunay_triangulate, voronoi_dual, DelaunayError, VoronoiDiagram};
use crate::features::{
    bottleneck_candidates, classify_edges, default_delta, estimate_curvature_local,
    medial_axis_short_edges, FeatureError,
};
use crate::geom::{point_segment_dist, BoundingBox, Point};
use crate::poly2::Poly2;
use crate::sampler::{epsilon_sample, nearest_point_on_curve, project_to_curve, refine_sample, Sample, SamplerError};
use crate::solver::{real_bottlenecks, real_critical_curvature, singular_points, SolverError};

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("curve has singular points in the window: {0:?}")]
    SingularCurve(Vec<Point>),
    #[error("empty set has no Hausdorff distance")]
    EmptySet,
    #[error("at most 6 halvings supported, got {0}")]
    TooManyHalvings(usize),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// The full reach computation: exact values plus both estimators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachReport {
    /// Minimum radius of curvature.
    pub q: f64,
    /// Narrowest bottleneck width.
    pub rho: f64,
    /// min(q, rho / 2).
    pub tau_exact: f64,
    pub tau_voronoi: f64,
    pub tau_delaunay: f64,
    pub sample_size: usize,
    pub epsilon: f64,
    pub critical_point_count: usize,
    pub bottleneck_pair_count: usize,
    pub degenerate_bottleneck_family: bool,
    pub warnings: Vec<String>,
}

/// Diagnostic detail of the Voronoi-based estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoronoiReach {
    pub tau: f64,
    /// Minimum over sites of the localized curvature estimate.
    pub curvature_min: f64,
    /// Bounding-disk radius, before any candidate improves it.
    pub bounding_radius: f64,
    /// Half the narrowest candidate width, when candidates exist.
    pub narrowest_candidate: Option<f64>,
    pub candidate_count: usize,
    /// Sites where the localized estimate failed and was skipped.
    pub skipped_sites: usize,
}

/// Voronoi-based reach estimation: curvature estimates at every site, then
/// bottleneck-candidate half-widths starting from the bounding-disk radius.
pub fn reach_voronoi(a: &Sample, p: &Poly2) -> Result<VoronoiReach, ReachError> {
    let t = delaunay_triangulate(&a.all_points)?;
    let v = voronoi_dual(&t);
    let classes = classify_edges(&v, p);

    let estimates: Vec<Option<f64>> = t
        .sites
        .par_iter()
        .map(|&s| {
            let delta = default_delta(&t, s);
            estimate_curvature_local(a, s, delta).ok()
        })
        .collect();
    let skipped_sites = estimates.iter().filter(|e| e.is_none()).count();
    let curvature_min = estimates
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, &v| m.min(v));

    let bounding_radius = BoundingBox::around(&a.all_points, 0.0)
        .map(|b| b.diagonal() / 2.0)
        .unwrap_or(f64::INFINITY);
    let cands = bottleneck_candidates(&v, &classes);
    let narrowest_candidate = cands.first().map(|c| c.width);
    let half_width = narrowest_candidate
        .map(|w| w / 2.0)
        .unwrap_or(f64::INFINITY)
        .min(bounding_radius);

    Ok(VoronoiReach {
        tau: curvature_min.min(half_width),
        curvature_min,
        bounding_radius,
        narrowest_candidate,
        candidate_count: cands.len(),
        skipped_sites,
    })
}

/// Delaunay-based reach estimation: the minimum over circumcenters of the
/// distance to the nearest sample point. Susceptible to sample error by
/// construction; it approaches the reach from below as epsilon shrinks.
pub fn reach_delaunay(a: &Sample) -> Result<f64, ReachError> {
    let t = delaunay_triangulate(&a.all_points)?;
    Ok(t
        .circumcenters
        .par_iter()
        .map(|c| {
            t.sites
                .iter()
                .map(|s| s.dist(*c))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min))
}

/// Exact reach tau = min(q, rho/2) with both estimators run for comparison.
/// Rejects curves with singular points in the sample window.
pub fn reach_exact(p: &Poly2, a: &Sample) -> Result<ReachReport, ReachError> {
    let bounds = BoundingBox::around(&a.all_points, a.epsilon).expect("nonempty sample");
    let sings = singular_points(p, &bounds);
    if !sings.is_empty() {
        return Err(ReachError::SingularCurve(sings));
    }
    let critical = real_critical_curvature(p, a)?;
    let t = delaunay_triangulate(&a.all_points)?;
    let v = voronoi_dual(&t);
    let classes = classify_edges(&v, p);
    let cands = bottleneck_candidates(&v, &classes);
    let bottlenecks = real_bottlenecks(p, a, Some(&cands));
    let q = critical.q;
    let rho = bottlenecks.rho;
    let voronoi = reach_voronoi(a, p)?;
    let tau_delaunay = reach_delaunay(a)?;
    let mut warnings = critical.warnings.clone();
    warnings.extend(bottlenecks.warnings.clone());
    Ok(ReachReport {
        q,
        rho,
        tau_exact: q.min(rho / 2.0),
        tau_voronoi: voronoi.tau,
        tau_delaunay,
        sample_size: a.all_points.len(),
        epsilon: a.epsilon,
        critical_point_count: critical.points.len(),
        bottleneck_pair_count: bottlenecks.pairs.len(),
        degenerate_bottleneck_family: bottlenecks.family.is_some(),
        warnings,
    })
}

/// A compact set represented as a soup of points and segments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeomSet {
    pub points: Vec<Point>,
    pub segments: Vec<(Point, Point)>,
}

impl GeomSet {
    pub fn from_points(points: Vec<Point>) -> Self {
        GeomSet { points, segments: Vec::new() }
    }

    pub fn from_segments(segments: Vec<(Point, Point)>) -> Self {
        GeomSet { points: Vec::new(), segments }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty()
    }

    fn diameter(&self) -> f64 {
        let mut pts: Vec<Point> = self.points.clone();
        for (a, b) in &self.segments {
            pts.push(*a);
            pts.push(*b);
        }
        BoundingBox::around(&pts, 0.0)
            .map(|b| b.diagonal())
            .unwrap_or(0.0)
    }

    /// Sample points at the given resolution (segments subdivided, endpoints
    /// included).
    fn sample(&self, res: f64) -> Vec<Point> {
        let mut out = self.points.clone();
        for (a, b) in &self.segments {
            let len = a.dist(*b);
            let n = ((len / res).ceil() as usize).max(1);
            for k in 0..=n {
                let t = k as f64 / n as f64;
                out.push(Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
            }
        }
        out
    }

    /// Exact distance from a point to the set.
    fn distance(&self, p: Point, cutoff: f64) -> f64 {
        let mut best = cutoff;
        for q in &self.points {
            best = best.min(p.dist(*q));
        }
        for (a, b) in &self.segments {
            // Cheap reject against the segment's bounding box.
            let dx = (a.x.min(b.x) - p.x).max(p.x - a.x.max(b.x)).max(0.0);
            let dy = (a.y.min(b.y) - p.y).max(p.y - a.y.max(b.y)).max(0.0);
            if dx.hypot(dy) >= best {
                continue;
            }
            best = best.min(point_segment_dist(p, *a, *b));
        }
        best
    }
}

/// Hausdorff distance between two compact point/segment soups. Segments on
/// the sup side are sampled at a thousandth of the larger diameter; the inf
/// side uses exact point-to-segment distances.
pub fn hausdorff(a: &GeomSet, b: &GeomSet) -> Result<f64, ReachError> {
    if a.is_empty() || b.is_empty() {
        return Err(ReachError::EmptySet);
    }
    let res = 1e-3 * a.diameter().max(b.diameter()).max(f64::MIN_POSITIVE);
    let directed = |from: &GeomSet, to: &GeomSet| -> f64 {
        from.sample(res)
            .par_iter()
            .map(|p| to.distance(*p, f64::INFINITY))
            .reduce(|| 0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Distances from a probe point to a sequence of Voronoi cells.
pub fn wijsman_profile(x: Point, cells: &[(&VoronoiDiagram, usize)]) -> Vec<f64> {
    cells.iter().map(|(v, i)| v.cell_distance(*i, x)).collect()
}

/// One probe of the convergence experiment: the Wijsman distance from
/// `probe` to the sample cell owned by the site nearest `anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WijsmanTracker {
    pub probe: Point,
    pub anchor: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub sample_size: usize,
    /// One Wijsman distance per tracker.
    pub wijsman: Vec<f64>,
    /// Hausdorff distance from this row's largest-circumradius triangles to
    /// the next (finer) row's; empty on the last row.
    pub triangle_hausdorff_to_next: Option<f64>,
    /// Same self-convergence measure for the short-edge medial set.
    pub medial_hausdorff_to_next: Option<f64>,
}

/// Track Voronoi cells and medial/triangle geometry across an
/// epsilon-halving sequence. Trackers pair a probe point with an anchor on
/// the curve; the tracked cell at each level belongs to the sample point
/// nearest the anchor, mirroring the x_eps -> x hypothesis of the limit
/// theorems.
pub fn convergence_experiment(
    p: &Poly2,
    window: &BoundingBox,
    eps0: f64,
    halvings: usize,
    trackers: &[WijsmanTracker],
    top_triangles: usize,
) -> Result<Vec<ConvergenceRow>, ReachError> {
    if halvings > 6 {
        return Err(ReachError::TooManyHalvings(halvings));
    }
    // Pin every anchor exactly onto the curve and inject it into each
    // sample. An epsilon-approximation plus extra on-curve points is still
    // an epsilon-approximation, and a tracked site that coincides with its
    // anchor at every level removes the O(epsilon) jitter of whichever
    // traced point happens to land nearest.
    let mut anchors: Vec<Point> = Vec::with_capacity(trackers.len());
    for tr in trackers {
        let refined = nearest_point_on_curve(p, tr.anchor, tr.anchor)
            .or_else(|_| nearest_point_on_curve(p, tr.probe, tr.anchor))?;
        anchors.push(refined);
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut tri_sets: Vec<GeomSet> = Vec::new();
    let mut medial_sets: Vec<GeomSet> = Vec::new();
    // Nested halving: each level refines the previous sample in place, so
    // successive rows measure the same local geometry at doubled density
    // rather than re-rolling where the tracer lands.
    let mut sample = epsilon_sample(p, window, eps0, &[])?;
    for level in 0..=halvings {
        if level > 0 {
            sample = refine_sample(p, &sample);
        }
        let eps = sample.epsilon;
        // Deterministic guards around every anchor: clear the traced points
        // within 0.4 eps and pin neighbors at exactly +- eps/4 along the
        // curve. The tracked cell then has the same local shape at every
        // level and its Wijsman profile shrinks structurally, instead of
        // jittering with wherever the tracer happened to land. Covering is
        // preserved, so each level remains an epsilon-approximation.
        let mut guards: Vec<Point> = Vec::new();
        for anchor in &anchors {
            let g = p.grad(*anchor);
            let tangent = crate::geom::Vec2::new(-g.y, g.x).normalized();
            for s in [-0.25 * eps, 0.25 * eps] {
                if let Some(gp) = project_to_curve(p, *anchor + tangent.scale(s)) {
                    guards.push(gp);
                }
            }
        }
        let mut sites: Vec<Point> = sample
            .all_points
            .iter()
            .copied()
            .filter(|pt| anchors.iter().all(|a| a.dist(*pt) > 0.4 * eps))
            .collect();
        sites.extend(anchors.iter().copied());
        sites.extend(guards);
        let t = delaunay_triangulate(&sites)?;
        let v = voronoi_dual(&t);
        let classes = classify_edges(&v, p);

        let wijsman: Vec<f64> = trackers
            .iter()
            .zip(&anchors)
            .map(|(tr, anchor)| {
                let site = v.nearest_site(*anchor);
                v.cell_distance(site, tr.probe)
            })
            .collect();

        // Maximal-cell approximants: the top triangles by *shortest edge*.
        // Circumradius is the wrong key here: slivers straddling an
        // inflection have circumradius growing like 1/epsilon and would
        // crowd out the persistent tritangent triangles. A triangle whose
        // three sites are mutually far apart on one empty circle is exactly
        // an inscribed-tritangent-circle approximant.
        let min_edge = |ti: usize| -> f64 {
            let [a, b, c] = t.triangles[ti];
            let (pa, pb, pc) = (t.sites[a], t.sites[b], t.sites[c]);
            pa.dist(pb).min(pb.dist(pc)).min(pc.dist(pa))
        };
        let mut order: Vec<usize> = (0..t.triangles.len()).collect();
        order.sort_by(|&i, &j| min_edge(j).partial_cmp(&min_edge(i)).unwrap());
        let mut tri_segments = Vec::new();
        for &ti in order.iter().take(top_triangles) {
            let [a, b, c] = t.triangles[ti];
            tri_segments.push((t.sites[a], t.sites[b]));
            tri_segments.push((t.sites[b], t.sites[c]));
            tri_segments.push((t.sites[c], t.sites[a]));
        }
        tri_sets.push(GeomSet::from_segments(tri_segments));
        medial_sets.push(GeomSet::from_segments(medial_axis_short_edges(
            &v, &classes, window,
        )));

        rows.push(ConvergenceRow {
            epsilon: eps,
            sample_size: sample.all_points.len(),
            wijsman,
            triangle_hausdorff_to_next: None,
            medial_hausdorff_to_next: None,
        });
    }
    for k in 0..halvings {
        rows[k].triangle_hausdorff_to_next = hausdorff(&tri_sets[k], &tri_sets[k + 1]).ok();
        rows[k].medial_hausdorff_to_next = hausdorff(&medial_sets[k], &medial_sets[k + 1]).ok();
    }
    Ok(rows)
}

/// Foot-point helper: anchor a tracker on the curve nearest `probe`.
pub fn tracker_at_foot(
    p: &Poly2,
    sample: &Sample,
    probe: Point,
) -> Result<WijsmanTracker, ReachError> {
    let seed = sample
        .all_points
        .iter()
        .copied()
        .min_by(|a, b| a.dist(probe).partial_cmp(&b.dist(probe)).unwrap())
        .expect("nonempty sample");
    let anchor = nearest_point_on_curve(p, probe, seed)?;
    Ok(WijsmanTracker { probe, anchor })
}
