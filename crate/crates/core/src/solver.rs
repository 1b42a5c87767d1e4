//! Newton-refined real solutions of the defining polynomial systems:
//! critical points of curvature, bottleneck pairs, and curve singularities.
//!
//! All solving is real and seeded from traced curve points, so completeness
//! of a solution list is asserted empirically (the answer is stable when the
//! sample density doubles), not certified. Every reported solution carries
//! residual certificates small enough to be rechecked independently through
//! the residual operations of [`crate::poly2`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::BottleneckCandidate;
use crate::geom::{BoundingBox, Point, Vec2};
use crate::poly2::{
    critical_curvature_poly, critical_curvature_raw, curvature, CurvatureEval, Poly2, PolyError,
    Var, ON_CURVE_TOL,
};
use crate::sampler::{epsilon_sample, Sample, SamplerError};

/// Solutions closer than this (relative to the sample diameter) are one.
pub const DEDUPE_TOL: f64 = 1e-6;
/// Residual acceptance threshold, relative to the local coefficient scale.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("curve degree {0} too low for critical-curvature analysis")]
    DegreeTooLow(usize),
    #[error("Newton did not converge")]
    NoConvergence,
    #[error("Jacobian numerically singular (condition above 1e14)")]
    SingularJacobian,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Damped Newton iteration on a square system with analytic Jacobian.
/// Halves the step up to ten times when the residual norm fails to drop.
pub fn newton_refine<F>(
    system: F,
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>, SolverError>
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    let (mut r, mut jac) = system(x.as_slice());
    for _ in 0..max_iter {
        let norm = r.amax();
        if norm < tol {
            return Ok(x.as_slice().to_vec());
        }
        let lu = jac.clone().full_piv_lu();
        let diag = lu.u().diagonal();
        let dmax = diag.amax();
        let dmin = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if dmin == 0.0 || dmax / dmin > 1e14 {
            return Err(SolverError::SingularJacobian);
        }
        let step = lu.solve(&r).ok_or(SolverError::SingularJacobian)?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let cand = &x - &step * lambda;
            let (rc, jc) = system(cand.as_slice());
            if rc.amax() < norm {
                x = cand;
                r = rc;
                jac = jc;
                improved = true;
                break;
            }
            lambda /= 2.0;
        }
        if !improved {
            // Accept the tiny step anyway; stagnation is caught by max_iter.
            x -= &step * lambda;
            let (rc, jc) = system(x.as_slice());
            r = rc;
            jac = jc;
        }
    }
    if r.amax() < tol {
        Ok(x.as_slice().to_vec())
    } else {
        Err(SolverError::NoConvergence)
    }
}

/// A refined critical point of curvature with residual certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: Point,
    /// Unsigned radius of curvature; infinite at inflection-adjacent roots.
    pub radius: f64,
    pub curvature: f64,
    pub residual_f: f64,
    pub residual_g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalCurvature {
    pub points: Vec<CriticalPoint>,
    /// Minimum radius of curvature over the critical points.
    pub q: f64,
    /// Circles: every point is critical, `points` holds one representative.
    pub constant_curvature: bool,
    pub warnings: Vec<String>,
}

fn sample_scale(a: &Sample) -> f64 {
    BoundingBox::around(&a.all_points, 0.0)
        .map(|b| b.diagonal())
        .unwrap_or(1.0)
}

fn dedupe_points(mut pts: Vec<Point>, tol: f64) -> Vec<Point> {
    pts.sort_by(Point::lex_cmp);
    let mut out: Vec<Point> = Vec::new();
    for p in pts {
        if out.iter().all(|q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    out
}

/// Seeds for {F = 0, G = 0}: sign changes of G between consecutive traced
/// points, plus discrete extrema of the radius of curvature (which catch
/// double roots that do not change sign).
fn critical_seeds(p: &Poly2, g: &Poly2, a: &Sample) -> Vec<Point> {
    let mut seeds = Vec::new();
    for comp in &a.components {
        let pts = &comp.points;
        if pts.len() < 3 {
            continue;
        }
        let g_vals: Vec<f64> = pts.iter().map(|q| g.eval(*q)).collect();
        let radii: Vec<f64> = pts
            .iter()
            .map(|q| match curvature(p, *q) {
                Ok(c) => c.radius_abs(),
                Err(_) => f64::INFINITY,
            })
            .collect();
        let n = pts.len();
        let idx = |i: isize| -> usize {
            if comp.is_closed() {
                i.rem_euclid(n as isize) as usize
            } else {
                i.clamp(0, n as isize - 1) as usize
            }
        };
        let pairs = if comp.is_closed() { n } else { n - 1 };
        for i in 0..pairs {
            let j = idx(i as isize + 1);
            if g_vals[i] == 0.0 {
                seeds.push(pts[i]);
            } else if g_vals[i] * g_vals[j] < 0.0 {
                let m = Point::new(
                    (pts[i].x + pts[j].x) / 2.0,
                    (pts[i].y + pts[j].y) / 2.0,
                );
                seeds.push(m);
            }
        }
        for i in 0..n {
            if !comp.is_closed() && (i == 0 || i + 1 == n) {
                continue;
            }
            let (prev, next) = (radii[idx(i as isize - 1)], radii[idx(i as isize + 1)]);
            let r = radii[i];
            if (r < prev && r < next) || (r > prev && r > next) {
                seeds.push(pts[i]);
            }
        }
    }
    dedupe_points(seeds, a.epsilon / 2.0)
}

fn refine_critical(
    p: &Poly2,
    g: &Poly2,
    seeds: &[Point],
    scale: f64,
    bounds: &BoundingBox,
) -> (Vec<CriticalPoint>, usize) {
    // Region-level magnitudes. The pointwise scale of G can vanish exactly
    // at its roots (the ellipse's -9xy vanishes on the axes), so residual
    // acceptance and row scaling both need a floor.
    let corner = Point::new(
        bounds.xmin.abs().max(bounds.xmax.abs()),
        bounds.ymin.abs().max(bounds.ymax.abs()),
    );
    let sp_ref = p.scale(corner).max(f64::MIN_POSITIVE);
    let sg_ref = g.scale(corner).max(f64::MIN_POSITIVE);
    let refined: Vec<Option<CriticalPoint>> = seeds
        .par_iter()
        .map(|s| {
            // Row scales frozen at the seed. Rescaling at the iterate would
            // be self-defeating: for a single-monomial G the pointwise scale
            // equals |G|, and the scaled residual never drops below one.
            let sp = p.scale(*s).max(1e-9 * sp_ref);
            let sg = g.scale(*s).max(1e-9 * sg_ref);
            let system = move |v: &[f64]| {
                let q = Point::new(v[0], v[1]);
                let jp = p.jet(q);
                let jg = g.jet(q);
                let r = DVector::from_column_slice(&[jp.f / sp, jg.f / sg]);
                let jac = DMatrix::from_row_slice(
                    2,
                    2,
                    &[jp.fx / sp, jp.fy / sp, jg.fx / sg, jg.fy / sg],
                );
                (r, jac)
            };
            let x = newton_refine(system, &[s.x, s.y], 60, 1e-13).ok()?;
            let q = Point::new(x[0], x[1]);
            if !bounds.contains(q) {
                return None;
            }
            let rf = p.eval(q).abs();
            let rg = g.eval(q).abs();
            if rf > RESIDUAL_TOL * p.scale(q) + 1e-12 * sp_ref
                || rg > RESIDUAL_TOL * g.scale(q) + 1e-12 * sg_ref
            {
                return None;
            }
            let (radius, kappa) = match curvature(p, q) {
                Ok(CurvatureEval::Curved(c)) => (c.radius_signed.abs(), c.curvature),
                Ok(CurvatureEval::Flat) => (f64::INFINITY, 0.0),
                Err(_) => return None,
            };
            Some(CriticalPoint { point: q, radius, curvature: kappa, residual_f: rf, residual_g: rg })
        })
        .collect();
    let dropped = refined.iter().filter(|r| r.is_none()).count();
    let mut pts: Vec<CriticalPoint> = refined.into_iter().flatten().collect();
    pts.sort_by(|a, b| a.point.lex_cmp(&b.point));
    let mut out: Vec<CriticalPoint> = Vec::new();
    for c in pts {
        if out
            .iter()
            .all(|o| o.point.dist(c.point) > DEDUPE_TOL * scale)
        {
            out.push(c);
        }
    }
    (out, dropped)
}

/// Real critical points of curvature on the traced components, with the
/// minimum radius q. Degree >= 3 uses the critical-curvature polynomial;
/// conics use the same construction without the degree statement, and a
/// vanishing construction (circles) reports a constant-curvature family.
/// The answer is accepted once a half-epsilon retrace reproduces the count
/// (up to three retries).
pub fn real_critical_curvature(
    p: &Poly2,
    a: &Sample,
) -> Result<CriticalCurvature, SolverError> {
    if p.degree() < 2 {
        return Err(SolverError::DegreeTooLow(p.degree()));
    }
    let g = if p.degree() >= 3 {
        critical_curvature_poly(p)?
    } else {
        critical_curvature_raw(p)
    };
    let scale = sample_scale(a);
    if g.is_zero() {
        // Constant curvature: report the family through a representative.
        let mut best: Option<CriticalPoint> = None;
        for q in &a.all_points {
            if let Ok(CurvatureEval::Curved(c)) = curvature(p, *q) {
                let cand = CriticalPoint {
                    point: *q,
                    radius: c.radius_signed.abs(),
                    curvature: c.curvature,
                    residual_f: p.eval(*q).abs(),
                    residual_g: 0.0,
                };
                if best.map_or(true, |b| cand.radius < b.radius) {
                    best = Some(cand);
                }
            }
        }
        let rep = best.ok_or(SolverError::NoConvergence)?;
        return Ok(CriticalCurvature {
            q: rep.radius,
            points: vec![rep],
            constant_curvature: true,
            warnings: Vec::new(),
        });
    }

    let bounds = BoundingBox::around(&a.all_points, 0.05 * scale + a.epsilon)
        .expect("sample is nonempty");
    let mut warnings = Vec::new();
    let run = |sample: &Sample| -> (Vec<CriticalPoint>, usize) {
        let seeds = critical_seeds(p, &g, sample);
        refine_critical(p, &g, &seeds, scale, &bounds)
    };
    let (mut points, mut dropped) = run(a);
    let mut current = a.clone();
    for _ in 0..3 {
        let finer = epsilon_sample(
            p,
            &bounds,
            current.epsilon / 2.0,
            &current.singular_points,
        )?;
        let (finer_points, finer_dropped) = run(&finer);
        let stable = finer_points.len() == points.len();
        points = finer_points;
        dropped = finer_dropped;
        current = finer;
        if stable {
            break;
        }
        warnings.push(format!(
            "critical point count changed at epsilon {}; retrying",
            current.epsilon
        ));
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} seeds dropped without convergence"));
    }
    let q = points
        .iter()
        .map(|c| c.radius)
        .fold(f64::INFINITY, f64::min);
    Ok(CriticalCurvature { points, q, constant_curvature: false, warnings })
}

/// A refined bottleneck pair, stored with x lexicographically before y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckPair {
    pub x: Point,
    pub y: Point,
    pub width: f64,
    pub residual_norm: f64,
}

/// A positive-dimensional family of bottlenecks (all diameters of a circle),
/// detected by rank-deficient Jacobians at converged solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFamily {
    pub width: f64,
    pub representative: BottleneckPair,
    pub members: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bottlenecks {
    pub pairs: Vec<BottleneckPair>,
    /// Narrowest bottleneck width, including a degenerate family's.
    pub rho: f64,
    pub family: Option<DegenerateFamily>,
    pub warnings: Vec<String>,
}

struct BnSolution {
    x: Point,
    y: Point,
    residual: f64,
    rank_deficient: bool,
}

fn bottleneck_scales(p: &Poly2, v: &[f64]) -> [f64; 4] {
    let x = Point::new(v[0], v[1]);
    let y = Point::new(v[2], v[3]);
    let d = (y - x).norm();
    [
        p.scale(x).max(f64::MIN_POSITIVE),
        p.scale(y).max(f64::MIN_POSITIVE),
        ((1.0 + d) * p.grad_scale(x)).max(f64::MIN_POSITIVE),
        ((1.0 + d) * p.grad_scale(y)).max(f64::MIN_POSITIVE),
    ]
}

fn bottleneck_system(p: &Poly2, v: &[f64], s: &[f64; 4]) -> (DVector<f64>, DMatrix<f64>, f64) {
    let x = Point::new(v[0], v[1]);
    let y = Point::new(v[2], v[3]);
    let jx = p.jet(x);
    let jy = p.jet(y);
    let d = y - x;
    let r1 = jx.f;
    let r2 = jy.f;
    let r3 = d.x * jx.fy - d.y * jx.fx;
    let r4 = -d.x * jy.fy + d.y * jy.fx;
    let [sx, sy, gsx, gsy] = *s;
    let r = DVector::from_column_slice(&[r1 / sx, r2 / sy, r3 / gsx, r4 / gsy]);
    #[rustfmt::skip]
    let jac = DMatrix::from_row_slice(4, 4, &[
        jx.fx / sx, jx.fy / sx, 0.0, 0.0,
        0.0, 0.0, jy.fx / sy, jy.fy / sy,
        (-jx.fy + d.x * jx.fxy - d.y * jx.fxx) / gsx,
        (jx.fx + d.x * jx.fyy - d.y * jx.fxy) / gsx,
        jx.fy / gsx,
        -jx.fx / gsx,
        jy.fy / gsy,
        -jy.fx / gsy,
        (-jy.fy - d.x * jy.fxy + d.y * jy.fxx) / gsy,
        (jy.fx - d.x * jy.fyy + d.y * jy.fxy) / gsy,
    ]);
    let raw_max = r1
        .abs()
        .max(r2.abs())
        .max(r3.abs())
        .max(r4.abs());
    (r, jac, raw_max)
}

/// Gauss-Newton with an SVD pseudo-inverse step. Positive-dimensional
/// solution sets (the circle's antipodal family) make the Jacobian singular
/// at the solutions themselves, where plain LU steps explode; the
/// minimal-norm step converges onto the family instead.
fn refine_bottleneck(p: &Poly2, seed: [f64; 4]) -> Option<BnSolution> {
    let mut v = seed;
    let scales = bottleneck_scales(p, &seed);
    let mut last_norm = f64::INFINITY;
    for _ in 0..60 {
        let (r, jac, _) = bottleneck_system(p, &v, &scales);
        let norm = r.amax();
        if norm < 1e-14 {
            break;
        }
        if norm > 1e6 || !norm.is_finite() {
            return None;
        }
        let svd = jac.svd(true, true);
        let step = svd.solve(&r, 1e-12).ok()?;
        let mut lambda = if norm < last_norm { 1.0 } else { 0.5 };
        let mut accepted = false;
        for _ in 0..8 {
            let cand = [
                v[0] - lambda * step[0],
                v[1] - lambda * step[1],
                v[2] - lambda * step[2],
                v[3] - lambda * step[3],
            ];
            let (rc, _, _) = bottleneck_system(p, &cand, &scales);
            if rc.amax() < norm {
                v = cand;
                accepted = true;
                break;
            }
            lambda /= 2.0;
        }
        if !accepted {
            // Stalled, typically at the rounding floor; the final residual
            // check decides whether this counts as converged.
            break;
        }
        last_norm = norm;
    }
    let (r, jac, raw) = bottleneck_system(p, &v, &scales);
    if r.amax() > RESIDUAL_TOL {
        return None;
    }
    let svd = jac.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank_deficient = smin < 1e-8 * smax;
    Some(BnSolution {
        x: Point::new(v[0], v[1]),
        y: Point::new(v[2], v[3]),
        residual: raw,
        rank_deficient,
    })
}

/// Sine of the largest normal misalignment a sample pair may show and still
/// seed Newton. Generous; duplicates collapse in deduplication.
const ALIGN_SIN: f64 = 0.35;

/// Real bottleneck pairs: Newton on the four-variable system, seeded from
/// candidate pairs plus an exhaustive alignment scan over sample pairs.
/// Pairs within the dedupe tolerance of the diagonal are excluded, mirroring
/// the saturation that removes x = y from the bottleneck locus.
pub fn real_bottlenecks(
    p: &Poly2,
    a: &Sample,
    candidates: Option<&[BottleneckCandidate]>,
) -> Bottlenecks {
    let scale = sample_scale(a);
    let min_width = 10.0 * DEDUPE_TOL * scale;
    let pts = &a.all_points;
    let grads: Vec<Vec2> = pts.iter().map(|q| p.grad(*q)).collect();
    let n = pts.len();
    let mut seeds: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pts = pts;
            let grads = &grads;
            (i + 1..n).filter_map(move |j| {
                let u = pts[j] - pts[i];
                let w = u.norm();
                if w < min_width.max(4.0 * a.epsilon) {
                    return None;
                }
                let gi = grads[i];
                let gj = grads[j];
                if u.cross(gi).abs() > ALIGN_SIN * w * gi.norm() {
                    return None;
                }
                if u.cross(gj).abs() > ALIGN_SIN * w * gj.norm() {
                    return None;
                }
                Some([pts[i].x, pts[i].y, pts[j].x, pts[j].y])
            })
        })
        .collect();
    if let Some(cands) = candidates {
        for c in cands {
            seeds.push([c.a_point.x, c.a_point.y, c.b_point.x, c.b_point.y]);
        }
    }

    let bounds = BoundingBox::around(pts, 0.05 * scale + a.epsilon).expect("nonempty sample");
    let solutions: Vec<BnSolution> = seeds
        .par_iter()
        .filter_map(|s| refine_bottleneck(p, *s))
        .filter(|sol| {
            bounds.contains(sol.x)
                && bounds.contains(sol.y)
                && sol.x.dist(sol.y) >= min_width
        })
        .collect();

    let mut isolated: Vec<BottleneckPair> = Vec::new();
    let mut family_members: Vec<BottleneckPair> = Vec::new();
    for sol in solutions {
        let (x, y) = if sol.x.lex_cmp(&sol.y).is_le() {
            (sol.x, sol.y)
        } else {
            (sol.y, sol.x)
        };
        let pair = BottleneckPair { x, y, width: x.dist(y), residual_norm: sol.residual };
        if sol.rank_deficient {
            family_members.push(pair);
        } else {
            isolated.push(pair);
        }
    }
    isolated.sort_by(|a, b| {
        a.x.lex_cmp(&b.x).then(a.y.lex_cmp(&b.y))
    });
    let mut pairs: Vec<BottleneckPair> = Vec::new();
    let tol = DEDUPE_TOL * scale;
    for c in isolated {
        // Unordered comparison: lex canonicalization can flip at symmetric
        // ties, so check both matchings.
        let dup = pairs.iter().any(|o| {
            (c.x.dist(o.x) <= tol && c.y.dist(o.y) <= tol)
                || (c.x.dist(o.y) <= tol && c.y.dist(o.x) <= tol)
        });
        if !dup {
            pairs.push(c);
        }
    }
    pairs.sort_by(|a, b| {
        a.width
            .partial_cmp(&b.width)
            .unwrap()
            .then(a.x.lex_cmp(&b.x))
    });

    let family = if family_members.is_empty() {
        None
    } else {
        let width = family_members
            .iter()
            .map(|m| m.width)
            .fold(f64::INFINITY, f64::min);
        let representative = family_members
            .iter()
            .copied()
            .min_by(|a, b| a.width.partial_cmp(&b.width).unwrap())
            .unwrap();
        Some(DegenerateFamily { width, representative, members: family_members.len() })
    };
    let rho = pairs
        .iter()
        .map(|p| p.width)
        .chain(family.iter().map(|f| f.width))
        .fold(f64::INFINITY, f64::min);
    Bottlenecks { pairs, rho, family, warnings: Vec::new() }
}

/// Damped Gauss-Newton with SVD pseudo-inverse steps; tolerates the
/// rank-deficient Jacobians that plain Newton rejects. Cusps sit at
/// degenerate roots of {F_x, F_y}, which is the normal case here.
fn svd_refine<F>(system: F, x0: &[f64], max_iter: usize, tol: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    for _ in 0..max_iter {
        let (r, jac) = system(x.as_slice());
        let norm = r.amax();
        if norm < tol {
            return Some(x.as_slice().to_vec());
        }
        if !norm.is_finite() {
            return None;
        }
        let svd = jac.svd(true, true);
        let step = svd.solve(&r, 1e-13).ok()?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let cand = &x - &step * lambda;
            let (rc, _) = system(cand.as_slice());
            if rc.amax() < norm {
                x = cand;
                accepted = true;
                break;
            }
            lambda /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    let (r, _) = system(x.as_slice());
    (r.amax() < tol).then(|| x.as_slice().to_vec())
}

/// Real singular points in the window: grid-seeded refinement of the square
/// subsystem {F_x = 0, F_y = 0}, filtered by |F| below the on-curve
/// tolerance, deduplicated.
pub fn singular_points(p: &Poly2, window: &BoundingBox) -> Vec<Point> {
    let fx = p.diff(Var::X);
    let fy = p.diff(Var::Y);
    let grid = 32;
    let seeds: Vec<Point> = (0..=grid)
        .flat_map(|i| {
            (0..=grid).map(move |j| {
                Point::new(
                    window.xmin + (window.xmax - window.xmin) * (i as f64) / (grid as f64),
                    window.ymin + (window.ymax - window.ymin) * (j as f64) / (grid as f64),
                )
            })
        })
        .collect();
    let pad = 0.01 * window.diagonal();
    let padded = BoundingBox::new(
        window.xmin - pad,
        window.xmax + pad,
        window.ymin - pad,
        window.ymax + pad,
    );
    let corner = Point::new(
        window.xmin.abs().max(window.xmax.abs()),
        window.ymin.abs().max(window.ymax.abs()),
    );
    let sx_ref = fx.scale(corner).max(f64::MIN_POSITIVE);
    let sy_ref = fy.scale(corner).max(f64::MIN_POSITIVE);
    let sf_ref = p.scale(corner).max(f64::MIN_POSITIVE);
    let found: Vec<Point> = seeds
        .par_iter()
        .filter_map(|s| {
            let sx = fx.scale(*s).max(1e-9 * sx_ref);
            let sy = fy.scale(*s).max(1e-9 * sy_ref);
            let system = move |v: &[f64]| {
                let q = Point::new(v[0], v[1]);
                let jp = p.jet(q);
                let r = DVector::from_column_slice(&[jp.fx / sx, jp.fy / sy]);
                let jac = DMatrix::from_row_slice(
                    2,
                    2,
                    &[jp.fxx / sx, jp.fxy / sx, jp.fxy / sy, jp.fyy / sy],
                );
                (r, jac)
            };
            let x = svd_refine(system, &[s.x, s.y], 100, 1e-13)?;
            let q = Point::new(x[0], x[1]);
            if !padded.contains(q) {
                return None;
            }
            // Mixed tolerance: at a cusp |F| and its pointwise scale vanish
            // together, so a region-level floor is needed as well.
            if p.eval(q).abs() > ON_CURVE_TOL * p.scale(q) + 1e-12 * sf_ref {
                return None;
            }
            Some(q)
        })
        .collect();
    dedupe_points(found, DEDUPE_TOL * window.diagonal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly2::parse_poly;
    use approx::assert_relative_eq;

    fn the_box(r: f64) -> BoundingBox {
        BoundingBox::new(-r, r, -r, r)
    }

    #[test]
    fn newton_sqrt2() {
        let system = |v: &[f64]| {
            let x = v[0];
            (
                DVector::from_column_slice(&[x * x - 2.0]),
                DMatrix::from_row_slice(1, 1, &[2.0 * x]),
            )
        };
        let x = newton_refine(system, &[1.0], 50, 1e-12).unwrap();
        assert_relative_eq!(x[0], 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn newton_singular_jacobian_detected() {
        let system = |v: &[f64]| {
            (
                DVector::from_column_slice(&[v[0] + v[1] - 1.0, 2.0 * (v[0] + v[1]) - 3.0]),
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]),
            )
        };
        assert!(matches!(
            newton_refine(system, &[0.0, 0.0], 20, 1e-10),
            Err(SolverError::SingularJacobian)
        ));
    }

    #[test]
    fn circle_bottleneck_family() {
        let c = parse_poly("x^2 + y^2 - 1").unwrap();
        let s = epsilon_sample(&c, &the_box(2.0), 0.05, &[]).unwrap();
        let result = real_bottlenecks(&c, &s, None);
        let fam = result.family.expect("circle has a degenerate family");
        assert_relative_eq!(fam.width, 2.0, max_relative = 1e-6);
        assert_relative_eq!(result.rho, 2.0, max_relative = 1e-6);
        // Residual certificate survives an independent recheck.
        let rep = fam.representative;
        let res = crate::poly2::bottleneck_residual(&c, rep.x, rep.y);
        for v in res {
            assert!(v.abs() < 1e-9, "residual {v}");
        }
    }

    #[test]
    fn ellipse_bottlenecks_are_the_axes() {
        let e = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        let s = epsilon_sample(&e, &the_box(3.0), 0.05, &[]).unwrap();
        let result = real_bottlenecks(&e, &s, None);
        assert!(result.family.is_none());
        assert_eq!(result.pairs.len(), 2, "pairs: {:?}", result.pairs);
        assert_relative_eq!(result.pairs[0].width, 2.0, max_relative = 1e-9);
        assert_relative_eq!(result.pairs[1].width, 4.0, max_relative = 1e-9);
        assert_relative_eq!(result.rho, 2.0, max_relative = 1e-9);
        for pair in &result.pairs {
            assert!(pair.residual_norm < 1e-10);
        }
    }

    #[test]
    fn ellipse_critical_points_are_the_vertices() {
        let e = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        let s = epsilon_sample(&e, &the_box(3.0), 0.05, &[]).unwrap();
        let result = real_critical_curvature(&e, &s).unwrap();
        assert!(!result.constant_curvature);
        assert_eq!(result.points.len(), 4, "points: {:?}", result.points);
        let expected = [
            Point::new(-2.0, 0.0),
            Point::new(0.0, -1.0),
            Point::new(0.0, 1.0),
            Point::new(2.0, 0.0),
        ];
        for want in expected {
            assert!(
                result.points.iter().any(|got| got.point.dist(want) < 1e-8),
                "vertex {want:?} missing from {:?}",
                result.points
            );
        }
        assert_relative_eq!(result.q, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn circle_constant_curvature_family() {
        let c = parse_poly("x^2 + y^2 - 1").unwrap();
        let s = epsilon_sample(&c, &the_box(2.0), 0.05, &[]).unwrap();
        let result = real_critical_curvature(&c, &s).unwrap();
        assert!(result.constant_curvature);
        assert_relative_eq!(result.q, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn cusp_singular_point_found() {
        let cusp = parse_poly("y^2 - x^3").unwrap();
        let sings = singular_points(&cusp, &the_box(2.0));
        assert_eq!(sings.len(), 1, "{sings:?}");
        assert!(sings[0].dist(Point::new(0.0, 0.0)) < 1e-4);
    }

    #[test]
    fn butterfly_is_smooth() {
        let b = parse_poly("x^4 - x^2*y^2 + y^4 - 4*x^2 - 2*y^2 - x - 4*y + 1").unwrap();
        assert!(singular_points(&b, &the_box(3.0)).is_empty());
    }

    #[test]
    fn node_and_isolated_point_found() {
        // Limacon with an inner loop: node at the origin.
        let node = parse_poly("(x^2 + y^2 - x)*(x^2 + y^2 - x) - 0.25*x^2 - 0.25*y^2").unwrap();
        let sings = singular_points(&node, &the_box(2.0));
        assert!(sings.iter().any(|s| s.dist(Point::new(0.0, 0.0)) < 1e-6), "{sings:?}");
        // Same family with an isolated real point at the origin.
        let iso = parse_poly("(x^2 + y^2 - x)*(x^2 + y^2 - x) - 2.25*x^2 - 2.25*y^2").unwrap();
        let sings = singular_points(&iso, &the_box(3.0));
        assert!(sings.iter().any(|s| s.dist(Point::new(0.0, 0.0)) < 1e-6), "{sings:?}");
    }
}
