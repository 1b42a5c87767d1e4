//! Geometric predicates with exact-sign guarantees.
//!
//! Curve samples are nearly cocircular by construction (consecutive points
//! approximate inscribed circles), which is precisely the regime where naive
//! floating-point in-circle tests misclassify. Each predicate first runs the
//! fast f64 formula with Shewchuk's forward error bound; only when the result
//! is smaller than the bound is it re-evaluated in exact rational arithmetic.
//! Every f64 is an exact rational, so the fallback is a true decision.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::geom::Point;

// 2^-53, the half-ulp unit used in Shewchuk's error analysis.
const EPS: f64 = f64::EPSILON / 2.0;
const CCW_ERRBOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_ERRBOUND: f64 = (10.0 + 96.0 * EPS) * EPS;

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coordinate")
}

// Double-double ("two-float") arithmetic with Dekker splitting. Used as a
// middle filter on curve samples, which are nearly cocircular and land the
// fast in-circle path in its error band almost every call; roughly 32 exact
// digits settle everything except true cocircular ties, which still go to
// rationals.

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    Dd { hi: s, lo: (a - av) + (b - bv) }
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    Dd { hi: p, lo: err }
}

impl Dd {
    #[inline]
    fn from(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let t = two_sum(s.hi, lo);
        Dd { hi: t.hi, lo: t.lo }
    }

    #[inline]
    fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let t = two_sum(p.hi, lo);
        Dd { hi: t.hi, lo: t.lo }
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Error bound for the double-double in-circle determinant; loose by a few
/// orders of magnitude against the 2^-106 unit to absorb the op count.
const DD_ICC_ERRBOUND: f64 = 1e-28;

/// Sign of the signed area of triangle (a, b, c): positive when the turn
/// a -> b -> c is counterclockwise. The magnitude is meaningful only on the
/// fast path; the sign is always exact.
pub fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    let detleft = (a.x - c.x) * (b.y - c.y);
    let detright = (a.y - c.y) * (b.x - c.x);
    let det = detleft - detright;
    let detsum = detleft.abs() + detright.abs();
    if det.abs() >= CCW_ERRBOUND * detsum {
        return det;
    }
    // Differences via two_sum stay exact, so only the dd products round.
    let acx = two_sum(a.x, -c.x);
    let acy = two_sum(a.y, -c.y);
    let bcx = two_sum(b.x, -c.x);
    let bcy = two_sum(b.y, -c.y);
    let dd = acx.mul(bcy).sub(acy.mul(bcx)).value();
    if dd.abs() > 1e-28 * detsum {
        return dd;
    }
    orient2d_exact(a, b, c)
}

fn orient2d_exact(a: Point, b: Point, c: Point) -> f64 {
    let det = (rat(a.x) - rat(c.x)) * (rat(b.y) - rat(c.y))
        - (rat(a.y) - rat(c.y)) * (rat(b.x) - rat(c.x));
    if det.is_zero() {
        0.0
    } else if det.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// In-circle test: positive when `d` lies strictly inside the circle through
/// the counterclockwise triangle (a, b, c), zero when cocircular (exactly),
/// negative outside. Sign is exact.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let adx = a.x - d.x;
    let ady = a.y - d.y;
    let bdx = b.x - d.x;
    let bdy = b.y - d.y;
    let cdx = c.x - d.x;
    let cdy = c.y - d.y;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;

    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;

    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    if det.abs() >= ICC_ERRBOUND * permanent {
        return det;
    }
    let dd = incircle_dd(a, b, c, d);
    if dd.abs() > DD_ICC_ERRBOUND * permanent {
        return dd;
    }
    incircle_exact(a, b, c, d)
}

fn incircle_dd(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let dx = Dd::from(d.x);
    let dy = Dd::from(d.y);
    let adx = Dd::from(a.x).sub(dx);
    let ady = Dd::from(a.y).sub(dy);
    let bdx = Dd::from(b.x).sub(dx);
    let bdy = Dd::from(b.y).sub(dy);
    let cdx = Dd::from(c.x).sub(dx);
    let cdy = Dd::from(c.y).sub(dy);
    let alift = adx.mul(adx).add(ady.mul(ady));
    let blift = bdx.mul(bdx).add(bdy.mul(bdy));
    let clift = cdx.mul(cdx).add(cdy.mul(cdy));
    let m_a = bdx.mul(cdy).sub(cdx.mul(bdy));
    let m_b = cdx.mul(ady).sub(adx.mul(cdy));
    let m_c = adx.mul(bdy).sub(bdx.mul(ady));
    alift.mul(m_a).add(blift.mul(m_b)).add(clift.mul(m_c)).value()
}

fn incircle_exact(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let adx = rat(a.x) - rat(d.x);
    let ady = rat(a.y) - rat(d.y);
    let bdx = rat(b.x) - rat(d.x);
    let bdy = rat(b.y) - rat(d.y);
    let cdx = rat(c.x) - rat(d.x);
    let cdy = rat(c.y) - rat(d.y);
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy)
        + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    if det.is_zero() {
        0.0
    } else if det.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// Circumcenter and circumradius of a non-degenerate triangle. Falls back to
/// exact rational arithmetic when the f64 denominator is unreliable, so
/// sliver triangles still get centers equidistant from their vertices.
pub fn circumcircle(a: Point, b: Point, c: Point) -> (Point, f64) {
    let bx = b.x - a.x;
    let by = b.y - a.y;
    let cx = c.x - a.x;
    let cy = c.y - a.y;
    let d = 2.0 * (bx * cy - by * cx);
    let perm = 2.0 * ((bx * cy).abs() + (by * cx).abs());
    let center = if d.abs() > 1e-10 * perm {
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        Point::new(a.x + ux, a.y + uy)
    } else {
        circumcenter_exact(a, b, c)
    };
    let radius = center.dist(a);
    (center, radius)
}

fn circumcenter_exact(a: Point, b: Point, c: Point) -> Point {
    use num_traits::ToPrimitive;
    let bx = rat(b.x) - rat(a.x);
    let by = rat(b.y) - rat(a.y);
    let cx = rat(c.x) - rat(a.x);
    let cy = rat(c.y) - rat(a.y);
    let d = (&bx * &cy - &by * &cx) * rat(2.0);
    if d.is_zero() {
        // Exactly collinear callers are rejected upstream; return a midpoint
        // so the caller still gets finite coordinates.
        return Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    }
    let b2 = &bx * &bx + &by * &by;
    let c2 = &cx * &cx + &cy * &cy;
    let ux = (&cy * &b2 - &by * &c2) / &d;
    let uy = (&bx * &c2 - &cx * &b2) / &d;
    Point::new(
        a.x + ux.to_f64().unwrap(),
        a.y + uy.to_f64().unwrap(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        assert!(orient2d(a, b, Point::new(0.0, 1.0)) > 0.0);
        assert!(orient2d(a, b, Point::new(0.0, -1.0)) < 0.0);
        assert_eq!(orient2d(a, b, Point::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn incircle_detects_exact_cocircularity() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(1.0, 1.0);
        assert_eq!(incircle(a, b, c, Point::new(0.0, 1.0)), 0.0);
        assert!(incircle(a, b, c, Point::new(0.5, 0.5)) > 0.0);
        assert!(incircle(a, b, c, Point::new(2.0, 2.0)) < 0.0);
    }

    #[test]
    fn incircle_exact_zero_far_from_origin() {
        // A translated unit square is still exactly cocircular; the fast
        // filter cannot certify the zero, so the rational path must.
        let o = 1.0e6;
        let a = Point::new(o, o);
        let b = Point::new(o + 1.0, o);
        let c = Point::new(o + 1.0, o + 1.0);
        assert_eq!(incircle(a, b, c, Point::new(o, o + 1.0)), 0.0);
        assert!(incircle(a, b, c, Point::new(o + 0.5, o + 0.5)) > 0.0);
    }

    #[test]
    fn circumcircle_equidistant() {
        let (c, r) = circumcircle(
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(0.0, 3.0),
        );
        assert!((c.dist(Point::new(0.0, 0.0)) - r).abs() < 1e-12 * r);
        assert!((c.dist(Point::new(4.0, 0.0)) - r).abs() < 1e-12 * r);
        assert!((c.dist(Point::new(0.0, 3.0)) - r).abs() < 1e-12 * r);
        assert_eq!(c, Point::new(2.0, 1.5));
    }

    #[test]
    fn circumcircle_sliver_fallback() {
        // Both products in the denominator nearly cancel; the f64 path is
        // hopeless and the rational fallback must keep equidistance.
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 1.0);
        let c = Point::new(2.0, 2.0 + 4e-16);
        let (center, r) = circumcircle(a, b, c);
        for p in [a, b, c] {
            assert!((center.dist(p) - r).abs() < 1e-9 * r, "off by {}", (center.dist(p) - r).abs() / r);
        }
    }
}
