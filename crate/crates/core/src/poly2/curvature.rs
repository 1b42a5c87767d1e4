//! Curvature of an implicit plane curve at a smooth point, two ways.
//!
//! The affine route evaluates
//!
//! ```text
//! R = (Fx^2 + Fy^2)^(3/2) / (Fxx Fy^2 - 2 Fxy Fx Fy + Fyy Fx^2)
//! ```
//!
//! and the center of curvature p - grad F * (Fx^2+Fy^2) / D. The projective
//! route uses the degree-d homogenization and its Hessian determinant H:
//!
//! ```text
//! R = (d-1)^2 (Fx^2 + Fy^2)^(3/2) / (z^2 H)      (at z = 1)
//! ```
//!
//! The two disagree in sign convention but must agree in magnitude, which
//! downstream code uses as a cross-check. Inflection points (vanishing
//! denominator) are an ordinary feature of real curves, so the flat case is
//! a first-class result variant rather than an error.

use thiserror::Error;

use super::{Poly2, ON_CURVE_TOL};
use crate::geom::Point;

/// Relative threshold below which a gradient counts as vanishing.
const SINGULAR_GRAD_TOL: f64 = 1e-9;
/// Relative threshold below which the curvature denominator counts as zero.
const FLAT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CurvatureError {
    #[error("point is not on the curve: |F| = {value:.3e} exceeds tolerance {tol:.3e}")]
    NotOnCurve { value: f64, tol: f64 },
    #[error("gradient vanishes at the query point (singular point)")]
    SingularPoint,
    #[error("homogeneous Hessian determinant vanishes at the query point")]
    HessianDegenerate,
}

/// Radius, curvature, and center of curvature at a smooth curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureData {
    /// Signed radius; the sign follows the curvature denominator and only
    /// the magnitude is meaningful for reach computations.
    pub radius_signed: f64,
    pub curvature: f64,
    /// Center of curvature, also the evolute point of the curve at `p`.
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureEval {
    Curved(CurvatureData),
    /// Inflection point: infinite radius, zero curvature, no center.
    Flat,
}

impl CurvatureEval {
    pub fn radius_abs(&self) -> f64 {
        match self {
            CurvatureEval::Curved(d) => d.radius_signed.abs(),
            CurvatureEval::Flat => f64::INFINITY,
        }
    }

    pub fn curvature(&self) -> f64 {
        match self {
            CurvatureEval::Curved(d) => d.curvature,
            CurvatureEval::Flat => 0.0,
        }
    }
}

fn check_on_curve(p: &Poly2, pt: Point) -> Result<(), CurvatureError> {
    let value = p.eval(pt).abs();
    let tol = ON_CURVE_TOL * p.scale(pt).max(f64::MIN_POSITIVE);
    if value > tol {
        Err(CurvatureError::NotOnCurve { value, tol })
    } else {
        Ok(())
    }
}

/// Curvature data at an on-curve smooth point.
pub fn curvature(p: &Poly2, pt: Point) -> Result<CurvatureEval, CurvatureError> {
    check_on_curve(p, pt)?;
    let j = p.jet(pt);
    let grad_sq = j.fx * j.fx + j.fy * j.fy;
    if grad_sq.sqrt() <= SINGULAR_GRAD_TOL * p.grad_scale(pt) {
        return Err(CurvatureError::SingularPoint);
    }
    let d = j.curvature_denominator();
    let d_scale = (j.fxx * j.fy * j.fy).abs()
        + 2.0 * (j.fxy * j.fx * j.fy).abs()
        + (j.fyy * j.fx * j.fx).abs();
    if d.abs() <= FLAT_TOL * d_scale.max(f64::MIN_POSITIVE) {
        return Ok(CurvatureEval::Flat);
    }
    let num = grad_sq.powf(1.5);
    let radius_signed = num / d;
    let curvature = d.abs() / num;
    let t = grad_sq / d;
    let center = Point::new(pt.x - j.fx * t, pt.y - j.fy * t);
    Ok(CurvatureEval::Curved(CurvatureData { radius_signed, curvature, center }))
}

/// Radius of curvature from the projective formula; magnitude agrees with
/// [`curvature`] to high relative accuracy and serves as its oracle.
pub fn curvature_homogeneous(p: &Poly2, pt: Point) -> Result<f64, CurvatureError> {
    check_on_curve(p, pt)?;
    let j = p.jet(pt);
    let grad_sq = j.fx * j.fx + j.fy * j.fy;
    if grad_sq.sqrt() <= SINGULAR_GRAD_TOL * p.grad_scale(pt) {
        return Err(CurvatureError::SingularPoint);
    }
    let h = p.hessian_det_z1();
    let hv = h.eval(pt);
    if hv.abs() <= FLAT_TOL * h.scale(pt).max(f64::MIN_POSITIVE) {
        return Err(CurvatureError::HessianDegenerate);
    }
    let d = p.degree() as f64;
    Ok((d - 1.0) * (d - 1.0) * grad_sq.powf(1.5) / hv)
}

/// The four residuals of the bottleneck system at a candidate pair:
/// F(x), F(y), (y-x) x grad F(x), (x-y) x grad F(y). All vanish exactly on
/// pairs whose joining line lies in both normal lines.
pub fn bottleneck_residual(p: &Poly2, x: Point, y: Point) -> [f64; 4] {
    let gx = p.grad(x);
    let gy = p.grad(y);
    [
        p.eval(x),
        p.eval(y),
        (y - x).cross(gx),
        (x - y).cross(gy),
    ]
}

/// The five residuals certifying a medial-axis point `m` with foot points
/// `q1`, `q2`: both feet on the curve, equidistance, and criticality of the
/// distance function at each foot.
pub fn medial_residual(p: &Poly2, m: Point, q1: Point, q2: Point) -> [f64; 5] {
    let g1 = p.grad(q1);
    let g2 = p.grad(q2);
    [
        p.eval(q1),
        p.eval(q2),
        m.dist_sq(q1) - m.dist_sq(q2),
        (m - q1).cross(g1),
        (m - q2).cross(g2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly2::parse_poly;
    use approx::assert_relative_eq;

    fn ellipse() -> Poly2 {
        parse_poly("(1/4)*x^2 + y^2 - 1").unwrap()
    }

    #[test]
    fn circle_radius_and_center() {
        for r in [1.0_f64, 2.0, 0.5] {
            let c = parse_poly(&format!("x^2 + y^2 - {}", r * r)).unwrap();
            match curvature(&c, Point::new(r, 0.0)).unwrap() {
                CurvatureEval::Curved(d) => {
                    assert_relative_eq!(d.radius_signed.abs(), r, max_relative = 1e-14);
                    assert_relative_eq!(d.curvature, 1.0 / r, max_relative = 1e-14);
                    assert!(d.center.dist(Point::new(0.0, 0.0)) < 1e-14);
                }
                CurvatureEval::Flat => panic!("circle is not flat"),
            }
        }
    }

    #[test]
    fn ellipse_vertex_curvature_is_two() {
        let e = ellipse();
        match curvature(&e, Point::new(2.0, 0.0)).unwrap() {
            CurvatureEval::Curved(d) => {
                assert_eq!(d.curvature, 2.0);
                assert_eq!(d.radius_signed.abs(), 0.5);
                assert_eq!(d.center, Point::new(1.5, 0.0));
            }
            CurvatureEval::Flat => panic!(),
        }
    }

    #[test]
    fn homogeneous_formula_matches_ellipse_arithmetic() {
        // At (2,0): d = 2, H = -2, grad = (1,0), so R = 1 * 1 / (-2) = -1/2.
        let r = curvature_homogeneous(&ellipse(), Point::new(2.0, 0.0)).unwrap();
        assert_eq!(r, -0.5);
        let c = parse_poly("x^2 + y^2 - 4").unwrap();
        let r = curvature_homogeneous(&c, Point::new(2.0, 0.0)).unwrap();
        assert_relative_eq!(r.abs(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn off_curve_and_singular_points_rejected() {
        let e = ellipse();
        assert!(matches!(
            curvature(&e, Point::new(0.0, 0.0)),
            Err(CurvatureError::NotOnCurve { .. })
        ));
        let cusp = parse_poly("y^2 - x^3").unwrap();
        assert!(matches!(
            curvature(&cusp, Point::new(0.0, 0.0)),
            Err(CurvatureError::SingularPoint)
        ));
    }

    #[test]
    fn inflection_reports_flat() {
        // y = x^3 has an inflection at the origin.
        let c = parse_poly("y - x^3").unwrap();
        assert_eq!(curvature(&c, Point::new(0.0, 0.0)).unwrap(), CurvatureEval::Flat);
    }

    #[test]
    fn center_lies_on_normal_line() {
        let e = ellipse();
        // sqrt(7)/2, 3/4 is on the ellipse.
        let p = Point::new(7.0_f64.sqrt() / 2.0, 0.75);
        if let CurvatureEval::Curved(d) = curvature(&e, p).unwrap() {
            let g = e.grad(p);
            let cross = (d.center - p).cross(g);
            assert!(cross.abs() < 1e-10 * e.scale(p));
        } else {
            panic!();
        }
    }

    #[test]
    fn bottleneck_residual_circle_cases() {
        let c = parse_poly("x^2 + y^2 - 1").unwrap();
        let r = bottleneck_residual(&c, Point::new(1.0, 0.0), Point::new(-1.0, 0.0));
        assert_eq!(r, [0.0, 0.0, 0.0, 0.0]);
        let r = bottleneck_residual(&c, Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 0.0);
        assert_eq!(r[2].abs(), 2.0);
        assert_eq!(r[3].abs(), 2.0);
    }

    #[test]
    fn medial_residual_ellipse_cases() {
        let e = ellipse();
        let r = medial_residual(&e, Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, -1.0));
        assert_eq!(r, [0.0; 5]);
        // Medial axis endpoint with a degenerate double foot point.
        let r = medial_residual(&e, Point::new(1.5, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 0.0));
        assert_eq!(r, [0.0; 5]);
    }

    proptest::proptest! {
        /// Swapping the pair exchanges residuals 1<->2 and 3<->4.
        #[test]
        fn bottleneck_residual_swap_symmetry(
            x0 in -2.0..2.0f64, y0 in -2.0..2.0f64,
            x1 in -2.0..2.0f64, y1 in -2.0..2.0f64,
        ) {
            let b = parse_poly("x^4 - x^2*y^2 + y^4 - 4*x^2 - 2*y^2 - x - 4*y + 1").unwrap();
            let p = Point::new(x0, y0);
            let q = Point::new(x1, y1);
            let r = bottleneck_residual(&b, p, q);
            let s = bottleneck_residual(&b, q, p);
            proptest::prop_assert_eq!(r[0], s[1]);
            proptest::prop_assert_eq!(r[1], s[0]);
            proptest::prop_assert_eq!(r[2], s[3]);
            proptest::prop_assert_eq!(r[3], s[2]);
        }
    }
}
