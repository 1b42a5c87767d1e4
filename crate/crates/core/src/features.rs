//! Sample-based metric features read off the Voronoi diagram.
//!
//! A Voronoi edge is long when it meets the curve and short otherwise; for
//! dense samples every cell has exactly two long edges and the short edges
//! approximate the medial axis. Local curvature estimation rebuilds the
//! diagram of the sample restricted to a ball and measures the distance from
//! a site to the nearest vertex of its own cell, and bottleneck candidates
//! are site pairs whose joining segment leaves both cells through short
//! edges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delaunay::{
    delaunay_triangulate, voronoi_dual, DelaunayError, EdgeClass, EdgeGeometry, Triangulation,
    VoronoiDiagram,
};
use crate::geom::{BoundingBox, Point, Ray, Vec2};
use crate::poly2::{Poly2, ON_CURVE_TOL};
use crate::sampler::Sample;

/// Subdivision count for edge-against-curve sign scanning. Exceeds the sign
/// alternation density of Voronoi edges at every sample density we produce.
const EDGE_SUBDIVISIONS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cell {cell} has {long_count} long edges, need exactly 2")]
    BadCellStructure { cell: usize, long_count: usize },
    #[error("only {found} sample points within delta, need at least 4")]
    TooFewPoints { found: usize },
    #[error(transparent)]
    Degenerate(#[from] DelaunayError),
}

/// Edge classification plus the cells violating the two-long-edges shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeClassification {
    pub classes: Vec<EdgeClass>,
    /// Cells whose long-edge count differs from 2; diagnostic only.
    pub cell_warnings: Vec<usize>,
}

/// Classify every Voronoi edge against V(F): long iff F changes sign along
/// it or |F| dips below the on-curve tolerance. Rays are scanned on a
/// truncated span of twice the site-cloud diameter.
pub fn classify_edges(v: &VoronoiDiagram, p: &Poly2) -> EdgeClassification {
    let ray_span = 2.0 * v.scale;
    let classes: Vec<EdgeClass> = v
        .edges
        .par_iter()
        .map(|e| {
            let point_at = |t: f64| match e.geom {
                EdgeGeometry::Segment { p: a, q: b } => {
                    Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
                }
                EdgeGeometry::Ray { origin, dir } => origin + dir.scale(t * ray_span),
            };
            let mut prev = f64::NAN;
            for k in 0..=EDGE_SUBDIVISIONS {
                let t = k as f64 / EDGE_SUBDIVISIONS as f64;
                let q = point_at(t);
                let f = p.eval(q);
                if f.abs() <= ON_CURVE_TOL * p.scale(q).max(f64::MIN_POSITIVE) {
                    return EdgeClass::Long;
                }
                if k > 0 && prev * f < 0.0 {
                    return EdgeClass::Long;
                }
                prev = f;
            }
            EdgeClass::Short
        })
        .collect();
    let mut cell_warnings = Vec::new();
    for (ci, cell) in v.cells.iter().enumerate() {
        let long = cell
            .edge_ids
            .iter()
            .filter(|&&id| classes[id] == EdgeClass::Long)
            .count();
        if long != 2 {
            cell_warnings.push(ci);
        }
    }
    EdgeClassification { classes, cell_warnings }
}

/// Union of short edges, clipped to a window so unbounded short rays become
/// finite segments. This is the short-edge medial-axis approximation.
pub fn medial_axis_short_edges(
    v: &VoronoiDiagram,
    classes: &EdgeClassification,
    clip: &BoundingBox,
) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    for (id, e) in v.edges.iter().enumerate() {
        if classes.classes[id] != EdgeClass::Short {
            continue;
        }
        match e.geom {
            EdgeGeometry::Segment { p, q } => {
                if let Some(seg) = clip_segment(p, q, clip) {
                    out.push(seg);
                }
            }
            EdgeGeometry::Ray { origin, dir } => {
                if let Some(seg) = clip_ray(&Ray { origin, dir }, clip) {
                    out.push(seg);
                }
            }
        }
    }
    out
}

/// A Delaunay circumcenter annotated as a medial-axis sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circumcenter {
    pub center: Point,
    pub radius: f64,
    pub nearest_site_dist: f64,
}

/// All triangle circumcenters, each with circumradius and distance to the
/// nearest site. Centers of near-maximally inscribed discs approximate the
/// medial axis.
pub fn medial_axis_circumcenters(t: &Triangulation) -> Vec<Circumcenter> {
    t.circumcenters
        .par_iter()
        .zip(t.circumradii.par_iter())
        .map(|(c, &r)| {
            let nearest = t
                .sites
                .iter()
                .map(|s| s.dist(*c))
                .fold(f64::INFINITY, f64::min);
            Circumcenter { center: *c, radius: r, nearest_site_dist: nearest }
        })
        .collect()
}

/// Estimated unit normal at a site: the mean of its two long-edge
/// directions, which straddle the true normal for dense samples.
pub fn estimate_normal(
    v: &VoronoiDiagram,
    site: usize,
    classes: &EdgeClassification,
) -> Result<Vec2, FeatureError> {
    let cell = &v.cells[site];
    let long: Vec<Vec2> = cell
        .edge_ids
        .iter()
        .filter(|&&id| classes.classes[id] == EdgeClass::Long)
        .map(|&id| match v.edges[id].geom {
            EdgeGeometry::Segment { p, q } => (q - p).normalized(),
            EdgeGeometry::Ray { dir, .. } => dir,
        })
        .collect();
    if long.len() != 2 {
        return Err(FeatureError::BadCellStructure { cell: site, long_count: long.len() });
    }
    let second = if long[0].dot(long[1]) < 0.0 { -long[1] } else { long[1] };
    Ok((long[0] + second).normalized())
}

/// Restrict the sample to B(p, delta) and return the nearest site plus the
/// vertices of its cell in the restricted diagram.
fn local_cell_vertices(
    a: &Sample,
    p: Point,
    delta: f64,
) -> Result<(Point, Vec<Point>), FeatureError> {
    let local: Vec<Point> = a
        .all_points
        .iter()
        .copied()
        .filter(|q| q.dist(p) <= delta)
        .collect();
    if local.len() < 4 {
        return Err(FeatureError::TooFewPoints { found: local.len() });
    }
    let t = delaunay_triangulate(&local)?;
    let v = voronoi_dual(&t);
    let site = v.nearest_site(p);
    Ok((v.sites[site], v.cells[site].vertices.clone()))
}

/// Local radius-of-curvature estimate at an on-sample point `p`: the
/// distance from the owning site to the nearest vertex of its cell in the
/// diagram of the sample restricted to B(p, delta).
///
/// The limit as the sample densifies is the radius of curvature exactly at
/// local curvature maxima (and on circles). Where curvature increases
/// toward one side, the restricted arc's ball-boundary endpoint e falls
/// inside the osculating disc and caps the cell at
/// -|p-e|^2 / (2 (p-e) . n) < R, a delta-dependent bias no density removes.
/// Minima over many sites, which is what reach estimation consumes, are
/// attained at curvature maxima and therefore unaffected.
pub fn estimate_curvature_local(a: &Sample, p: Point, delta: f64) -> Result<f64, FeatureError> {
    let (site, vertices) = local_cell_vertices(a, p, delta)?;
    Ok(vertices
        .iter()
        .map(|v| v.dist(site))
        .fold(f64::INFINITY, f64::min))
}

/// Default localization radius: 0.9 times the distance from `p` to the
/// nearest Voronoi vertex of the full diagram. A local-feature-size proxy;
/// the theory wants delta below the distance to the nearest critical
/// curvature point, which is not known without the solver.
pub fn default_delta(t: &Triangulation, p: Point) -> f64 {
    0.9 * t
        .circumcenters
        .iter()
        .map(|c| c.dist(p))
        .fold(f64::INFINITY, f64::min)
}

/// Evolute approximation: for every site, the nearest vertex of its cell in
/// the ball-restricted diagram approximates its center of curvature. The
/// union over the ball cover approximates the evolute.
pub fn evolute_points(a: &Sample, t: &Triangulation) -> Vec<Point> {
    t.sites
        .par_iter()
        .filter_map(|&s| {
            let delta = default_delta(t, s);
            let (site, vertices) = local_cell_vertices(a, s, delta).ok()?;
            vertices
                .into_iter()
                .min_by(|u, w| {
                    u.dist(site)
                        .partial_cmp(&w.dist(site))
                        .unwrap()
                })
        })
        .collect()
}

/// A pair of sites whose joining segment leaves the first cell and enters
/// the second through short edges; the sample-level bottleneck surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckCandidate {
    pub a: usize,
    pub b: usize,
    pub a_point: Point,
    pub b_point: Point,
    pub width: f64,
    pub exit_edge_a: usize,
    pub entry_edge_b: usize,
}

/// First boundary crossing of the segment site -> target within the cell of
/// `site`, walking outward; returns the crossed edge id.
fn exit_edge(v: &VoronoiDiagram, cell: usize, target: Point) -> Option<usize> {
    let a = v.sites[v.cells[cell].site];
    let d = target - a;
    let mut best: Option<(f64, usize)> = None;
    for &id in &v.cells[cell].edge_ids {
        let hit = match v.edges[id].geom {
            EdgeGeometry::Segment { p, q } => cross_param(a, d, p, q - p, 0.0, 1.0),
            EdgeGeometry::Ray { origin, dir } => {
                cross_param(a, d, origin, dir, 0.0, f64::INFINITY)
            }
        };
        if let Some(t) = hit {
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, id));
            }
        }
    }
    best.map(|(_, id)| id)
}

/// Parameter t along a + t*d (t in (0, 1]) where it crosses the element
/// b + s*e with s in [s_min, s_max].
fn cross_param(a: Point, d: Vec2, b: Point, e: Vec2, s_min: f64, s_max: f64) -> Option<f64> {
    let denom = d.cross(e);
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = b - a;
    let t = w.cross(e) / denom;
    let s = w.cross(d) / denom;
    let tol = 1e-9;
    if t > tol && t <= 1.0 + tol && s >= s_min - tol && s <= s_max + tol {
        Some(t)
    } else {
        None
    }
}

/// All bottleneck candidates of the diagram, deduplicated as unordered
/// pairs and sorted by width.
pub fn bottleneck_candidates(
    v: &VoronoiDiagram,
    classes: &EdgeClassification,
) -> Vec<BottleneckCandidate> {
    let n = v.sites.len();
    let mut out: Vec<BottleneckCandidate> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let v_ref = v;
            let classes = &classes.classes;
            (i + 1..n).filter_map(move |j| {
                let (pa, pb) = (v_ref.sites[i], v_ref.sites[j]);
                let exit_a = exit_edge(v_ref, i, pb)?;
                if classes[exit_a] != EdgeClass::Short {
                    return None;
                }
                let exit_b = exit_edge(v_ref, j, pa)?;
                if classes[exit_b] != EdgeClass::Short {
                    return None;
                }
                Some(BottleneckCandidate {
                    a: i,
                    b: j,
                    a_point: pa,
                    b_point: pb,
                    width: pa.dist(pb),
                    exit_edge_a: exit_a,
                    entry_edge_b: exit_b,
                })
            })
        })
        .collect();
    out.sort_by(|x, y| {
        x.width
            .partial_cmp(&y.width)
            .unwrap()
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    out
}

fn clip_segment(p: Point, q: Point, b: &BoundingBox) -> Option<(Point, Point)> {
    let d = q - p;
    let (t0, t1) = clip_range(p, d, b, 0.0, 1.0)?;
    Some((p + d.scale(t0), p + d.scale(t1)))
}

fn clip_ray(r: &Ray, b: &BoundingBox) -> Option<(Point, Point)> {
    let (t0, t1) = clip_range(r.origin, r.dir, b, 0.0, f64::INFINITY)?;
    if !t1.is_finite() {
        return None; // window does not bound the ray; caller picked a bad clip
    }
    Some((r.point_at(t0), r.point_at(t1)))
}

/// Liang-Barsky style parameter clipping of a + t*d against the box.
fn clip_range(a: Point, d: Vec2, b: &BoundingBox, mut t0: f64, mut t1: f64) -> Option<(f64, f64)> {
    for (p, q) in [
        (-d.x, a.x - b.xmin),
        (d.x, b.xmax - a.x),
        (-d.y, a.y - b.ymin),
        (d.y, b.ymax - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            t0 = t0.max(r);
        } else {
            t1 = t1.min(r);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly2::parse_poly;
    use crate::sampler::epsilon_sample;

    fn circle_sample(eps: f64) -> (Poly2, Sample) {
        let p = parse_poly("x^2 + y^2 - 1").unwrap();
        let b = BoundingBox::new(-2.0, 2.0, -2.0, 2.0);
        let s = epsilon_sample(&p, &b, eps, &[]).unwrap();
        (p, s)
    }

    fn ellipse_sample(eps: f64) -> (Poly2, Sample) {
        let p = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        let b = BoundingBox::new(-3.0, 3.0, -3.0, 3.0);
        let s = epsilon_sample(&p, &b, eps, &[]).unwrap();
        (p, s)
    }

    #[test]
    fn circle_cells_have_two_long_edges_and_no_short_ones() {
        let (p, s) = circle_sample(0.1);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        assert!(cls.cell_warnings.is_empty(), "cells {:?}", cls.cell_warnings);
        assert!(cls.classes.iter().all(|&c| c == EdgeClass::Long));
        let medial = medial_axis_short_edges(&v, &cls, &BoundingBox::new(-2.0, 2.0, -2.0, 2.0));
        assert!(medial.is_empty());
    }

    #[test]
    fn ellipse_short_edges_concentrate_on_the_axis() {
        let (p, s) = ellipse_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        assert!(cls.cell_warnings.is_empty());
        let medial = medial_axis_short_edges(&v, &cls, &BoundingBox::new(-3.0, 3.0, -3.0, 3.0));
        assert!(!medial.is_empty());
        for (a, b) in &medial {
            for q in [a, b] {
                assert!(q.y.abs() < 0.1, "short-edge point {q:?} off the axis");
                assert!(q.x.abs() < 1.5 + 0.1, "short-edge point {q:?} beyond endpoints");
            }
        }
    }

    #[test]
    fn circle_circumcenters_cluster_at_origin() {
        let (_, s) = circle_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        for c in medial_axis_circumcenters(&t) {
            assert!(c.center.dist(Point::new(0.0, 0.0)) <= 0.05 * 0.05);
            assert!((c.radius - 1.0).abs() < 0.01);
            assert!((c.nearest_site_dist - c.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_estimates_point_along_true_normals() {
        let (p, s) = circle_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        let site = v.nearest_site(Point::new(1.0, 0.0));
        let n = estimate_normal(&v, site, &cls).unwrap();
        let true_n = p.grad(v.sites[site]).normalized();
        let angle = n.dot(true_n).abs().clamp(-1.0, 1.0).acos();
        assert!(angle < 1f64.to_radians(), "angular error {}", angle.to_degrees());
        // Ellipse top by symmetry.
        let (p, s) = ellipse_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        let site = v.nearest_site(Point::new(0.0, 1.0));
        let n = estimate_normal(&v, site, &cls).unwrap();
        assert!(n.x.abs() < 0.2 && n.y.abs() > 0.98);
    }

    #[test]
    fn local_curvature_estimate_circle() {
        let (_, s) = circle_sample(0.01);
        let est = estimate_curvature_local(&s, Point::new(1.0, 0.0), 0.5).unwrap();
        assert!((est - 1.0).abs() < 0.02, "estimate {est}");
    }

    #[test]
    fn local_curvature_estimate_ellipse_vertex() {
        let (_, s) = ellipse_sample(0.005);
        let est = estimate_curvature_local(&s, Point::new(2.0, 0.0), 0.4).unwrap();
        assert!((est - 0.5).abs() < 0.02, "estimate {est}");
    }

    #[test]
    fn too_few_points_is_reported() {
        let (_, s) = circle_sample(0.1);
        assert!(matches!(
            estimate_curvature_local(&s, Point::new(1.0, 0.0), 1e-6),
            Err(FeatureError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn ellipse_bottleneck_candidates_include_both_axes() {
        let (p, s) = ellipse_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        let cands = bottleneck_candidates(&v, &cls);
        assert!(!cands.is_empty());
        let narrowest = cands.first().unwrap();
        assert!(
            (narrowest.width - 2.0).abs() < 0.1,
            "narrowest {}",
            narrowest.width
        );
        // Only the minor-axis pair shows up: the major-axis bottleneck is a
        // width maximum whose midpoint (the origin) is nearer to (0, +-1)
        // than to (+-2, 0), so it is not in the medial axis and its segment
        // cannot leave the end cells through short edges.
        for c in &cands {
            assert!((c.width - 2.0).abs() < 0.1, "unexpected candidate width {}", c.width);
            assert!(c.a_point.x.abs() < 0.2 && c.b_point.x.abs() < 0.2);
        }
        // Candidates are canonical (a < b) and unique.
        let mut seen = std::collections::HashSet::new();
        for c in &cands {
            assert!(c.a < c.b);
            assert!(seen.insert((c.a, c.b)));
        }
    }

    #[test]
    fn circle_has_no_candidates() {
        let (p, s) = circle_sample(0.05);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let v = voronoi_dual(&t);
        let cls = classify_edges(&v, &p);
        assert!(bottleneck_candidates(&v, &cls).is_empty());
    }

    #[test]
    fn evolute_of_circle_collapses_to_center() {
        let (_, s) = circle_sample(0.02);
        let t = delaunay_triangulate(&s.all_points).unwrap();
        let pts = evolute_points(&s, &t);
        assert!(!pts.is_empty());
        for q in pts {
            assert!(q.dist(Point::new(0.0, 0.0)) < 0.05, "evolute point {q:?}");
        }
    }
}
