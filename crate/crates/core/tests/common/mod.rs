//! Independent oracles shared by the integration suites. Everything here
//! recomputes expected values through routes the library does not use.

use curvelab::delaunay::predicates::{circumcircle, incircle};
use curvelab::delaunay::{verify_lower_hull, Triangulation, VoronoiDiagram};
use curvelab::geom::{BoundingBox, Point};
use curvelab::poly2::Poly2;

/// Marching-squares contour points: for every grid cell edge with a sign
/// change, the linearly interpolated crossing. A dense, triangulation-free
/// picture of the real locus.
pub fn marching_squares(p: &Poly2, window: &BoundingBox, n: usize) -> Vec<Point> {
    let xs: Vec<f64> = (0..=n)
        .map(|i| window.xmin + (window.xmax - window.xmin) * i as f64 / n as f64)
        .collect();
    let ys: Vec<f64> = (0..=n)
        .map(|j| window.ymin + (window.ymax - window.ymin) * j as f64 / n as f64)
        .collect();
    let val = |i: usize, j: usize| p.eval(Point::new(xs[i], ys[j]));
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let v = val(i, j);
            for (i2, j2) in [(i + 1, j), (i, j + 1)] {
                if i2 > n || j2 > n {
                    continue;
                }
                let w = val(i2, j2);
                if v * w < 0.0 {
                    let t = v / (v - w);
                    out.push(Point::new(
                        xs[i] + (xs[i2] - xs[i]) * t,
                        ys[j] + (ys[j2] - ys[j]) * t,
                    ));
                }
            }
        }
    }
    out
}

/// Radius of the circle through three points; the osculating-circle fit
/// used as a finite-difference curvature oracle.
pub fn three_point_radius(a: Point, b: Point, c: Point) -> f64 {
    circumcircle(a, b, c).1
}

/// Brute-force empty-circumcircle check of a finished triangulation.
pub fn empty_circumcircle_brute(t: &Triangulation) -> bool {
    for tri in &t.triangles {
        for (s, &p) in t.sites.iter().enumerate() {
            if tri.contains(&s) {
                continue;
            }
            if incircle(t.sites[tri[0]], t.sites[tri[1]], t.sites[tri[2]], p) > 0.0 {
                return false;
            }
        }
    }
    true
}

/// Structural oracle bundle: brute empty-circumcircle, the paraboloid-lift
/// lower-face check, and nearest-site agreement on pseudo-random probes.
pub fn check_structure(t: &Triangulation, v: &VoronoiDiagram, probes: usize, seed: u64) {
    use rand::{Rng, SeedableRng};
    assert!(
        t.sites.len() <= 300,
        "structural oracle is for small triangulations"
    );
    assert!(empty_circumcircle_brute(t), "empty-circumcircle violated");
    assert!(verify_lower_hull(t), "lower-hull support violated");
    let bbox = BoundingBox::around(&t.sites, 0.5).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        let p = Point::new(
            rng.random_range(bbox.xmin..bbox.xmax),
            rng.random_range(bbox.ymin..bbox.ymax),
        );
        let s = v.nearest_site(p);
        assert!(
            v.cell_contains(s, p),
            "nearest-site cell of {p:?} does not contain it"
        );
    }
}
