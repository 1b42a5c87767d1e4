//! Layered SVG rendering. Unbounded Voronoi rays are clipped at the render
//! window only; nothing upstream ever clips. Output is deterministic:
//! fixed layer order, fixed float formatting.

use anyhow::{bail, Result};
use std::fmt::Write;

use curvelab::delaunay::{delaunay_triangulate, voronoi_dual, EdgeClass, EdgeGeometry};
use curvelab::features::{
    bottleneck_candidates, classify_edges, evolute_points, medial_axis_circumcenters,
    medial_axis_short_edges,
};
use curvelab::geom::{BoundingBox, Point, Ray};
use curvelab::poly2::Poly2;
use curvelab::sampler::Sample;
use curvelab::solver::{real_bottlenecks, real_critical_curvature};

const LAYERS: &[&str] = &[
    "curve",
    "points",
    "delaunay",
    "voronoi",
    "edges",
    "medial",
    "circumcenters",
    "candidates",
    "bottlenecks",
    "critical",
    "evolute",
];

pub fn render(poly: &Poly2, window: &BoundingBox, sample: &Sample, layers: &str) -> Result<String> {
    let requested: Vec<&str> = layers.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    for l in &requested {
        if !LAYERS.contains(l) {
            bail!("unknown layer {l:?}; available: {}", LAYERS.join(", "));
        }
    }
    let want = |name: &str| requested.iter().any(|l| *l == name);

    let diag = window.diagonal();
    let stroke = diag / 900.0;
    let dot = diag / 400.0;
    let mut body = String::new();

    // Structures are built lazily but deterministically in layer order.
    let needs_diagram = ["delaunay", "voronoi", "edges", "medial", "circumcenters", "candidates"]
        .iter()
        .any(|l| want(l));
    let structures = if needs_diagram {
        let t = delaunay_triangulate(&sample.all_points)?;
        let v = voronoi_dual(&t);
        let classes = classify_edges(&v, poly);
        Some((t, v, classes))
    } else {
        None
    };

    if want("curve") {
        for comp in &sample.components {
            body.push_str(&polyline(&comp.points, comp.is_closed(), "#7b2d8b", stroke * 2.0));
        }
    }
    if want("delaunay") {
        let (t, _, _) = structures.as_ref().unwrap();
        for tri in &t.triangles {
            for k in 0..3 {
                let (a, b) = (t.sites[tri[k]], t.sites[tri[(k + 1) % 3]]);
                if tri[k] < tri[(k + 1) % 3] {
                    body.push_str(&segment(a, b, "#c9c9c9", stroke));
                }
            }
        }
    }
    if want("voronoi") || want("edges") || want("medial") {
        let (_, v, classes) = structures.as_ref().unwrap();
        for (id, e) in v.edges.iter().enumerate() {
            let color = if want("edges") || want("medial") {
                match classes.classes[id] {
                    EdgeClass::Long => "#3b6fd4",
                    EdgeClass::Short => "#d43b3b",
                    EdgeClass::Unclassified => "#9a9a9a",
                }
            } else {
                "#9a9a9a"
            };
            if want("medial") && classes.classes[id] != EdgeClass::Short && !want("voronoi") && !want("edges") {
                continue;
            }
            match e.geom {
                EdgeGeometry::Segment { p, q } => body.push_str(&segment(p, q, color, stroke)),
                EdgeGeometry::Ray { origin, dir } => {
                    if let Some((a, b)) = clip_ray(&Ray { origin, dir }, window) {
                        body.push_str(&segment(a, b, color, stroke));
                    }
                }
            }
        }
        if want("medial") && !want("voronoi") && !want("edges") {
            let (_, v, classes) = structures.as_ref().unwrap();
            for (a, b) in medial_axis_short_edges(v, classes, window) {
                body.push_str(&segment(a, b, "#d43b3b", stroke * 1.5));
            }
        }
    }
    if want("circumcenters") {
        let (t, _, _) = structures.as_ref().unwrap();
        for c in medial_axis_circumcenters(t) {
            if window.contains(c.center) {
                body.push_str(&circle(c.center, dot * 0.8, "#d43b3b"));
            }
        }
    }
    if want("candidates") {
        let (_, v, classes) = structures.as_ref().unwrap();
        for c in bottleneck_candidates(v, classes) {
            body.push_str(&segment(c.a_point, c.b_point, "#2f9e44", stroke));
        }
    }
    if want("bottlenecks") {
        let bn = real_bottlenecks(poly, sample, None);
        for pair in &bn.pairs {
            body.push_str(&segment(pair.x, pair.y, "#1b6e2f", stroke * 2.0));
            body.push_str(&circle(pair.x, dot, "#1b6e2f"));
            body.push_str(&circle(pair.y, dot, "#1b6e2f"));
        }
    }
    if want("critical") {
        let cc = real_critical_curvature(poly, sample)?;
        for c in &cc.points {
            body.push_str(&circle(c.point, dot * 1.2, "#e8590c"));
            if c.radius.is_finite() {
                if let Ok(curvelab::poly2::CurvatureEval::Curved(data)) =
                    curvelab::poly2::curvature(poly, c.point)
                {
                    body.push_str(&segment(c.point, data.center, "#69db7c", stroke));
                }
            }
        }
    }
    if want("evolute") {
        let t = delaunay_triangulate(&sample.all_points)?;
        for q in evolute_points(sample, &t) {
            if window.contains(q) {
                body.push_str(&circle(q, dot * 0.6, "#74c0fc"));
            }
        }
    }
    if want("points") {
        for p in &sample.all_points {
            body.push_str(&circle(*p, dot * 0.7, "#1a1a1a"));
        }
    }

    let w = window.xmax - window.xmin;
    let h = window.ymax - window.ymin;
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
         <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n{}</svg>\n",
        fmt(window.xmin),
        fmt(-window.ymax),
        fmt(w),
        fmt(h),
        fmt(window.xmin),
        fmt(-window.ymax),
        fmt(w),
        fmt(h),
        body
    ))
}

fn fmt(v: f64) -> String {
    format!("{v:.5}")
}

/// SVG y grows downward; geometry y is flipped on output.
fn segment(a: Point, b: Point, color: &str, width: f64) -> String {
    format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{}\"/>\n",
        fmt(a.x),
        fmt(-a.y),
        fmt(b.x),
        fmt(-b.y),
        fmt(width)
    )
}

fn circle(c: Point, r: f64, color: &str) -> String {
    format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\"/>\n",
        fmt(c.x),
        fmt(-c.y),
        fmt(r)
    )
}

fn polyline(points: &[Point], closed: bool, color: &str, width: f64) -> String {
    let mut attr = String::new();
    for p in points {
        let _ = write!(attr, "{},{} ", fmt(p.x), fmt(-p.y));
    }
    let tag = if closed { "polygon" } else { "polyline" };
    format!(
        "<{tag} points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>\n",
        attr.trim_end(),
        fmt(width)
    )
}

fn clip_ray(ray: &Ray, window: &BoundingBox) -> Option<(Point, Point)> {
    // Liang-Barsky on the parameter range [0, inf).
    let (mut t0, mut t1) = (0.0_f64, f64::INFINITY);
    for (p, q) in [
        (-ray.dir.x, ray.origin.x - window.xmin),
        (ray.dir.x, window.xmax - ray.origin.x),
        (-ray.dir.y, ray.origin.y - window.ymin),
        (ray.dir.y, window.ymax - ray.origin.y),
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
    t1.is_finite().then(|| (ray.point_at(t0), ray.point_at(t1)))
}
