//! Dense bivariate and trivariate polynomials with exact rational
//! coefficients, plus the differential-geometry formulas built on them:
//! curvature and centers of curvature, the critical-curvature polynomial,
//! and the bottleneck and medial-axis residual systems.
//!
//! Coefficients are stored twice: exactly as rationals, which every symbolic
//! construction (differentiation, products, homogenization, Hessian
//! determinants) operates on, and as a rounded `f64` mirror used for all
//! point evaluation. Degree-14 constructions like the critical-curvature
//! polynomial cancel catastrophically in floating point, which is why the
//! symbolic side never leaves the rationals.

mod curvature;
mod parse;

pub use curvature::{
    bottleneck_residual, curvature, curvature_homogeneous, medial_residual, CurvatureData,
    CurvatureEval, CurvatureError,
};
pub use parse::parse_poly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

use crate::geom::Point;

/// Hard cap on expanded degree; the parser rejects anything larger.
pub const MAX_DEGREE: usize = 64;

/// Relative tolerance deciding whether a point counts as lying on the curve:
/// a point is on V(F) when |F(p)| <= ON_CURVE_TOL * scale(F, p), with
/// scale(F, p) = sum |c_ij| |x|^i |y|^j.
pub const ON_CURVE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}")]
    Overflow { degree: usize },
    #[error("degree {actual} below required {required}")]
    Degree { required: usize, actual: usize },
}

/// Differentiation variable for [`Poly2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Differentiation variable for [`Poly3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var3 {
    X,
    Y,
    Z,
}

/// Value of F and its partial derivatives through order two at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

impl Jet2 {
    pub fn grad_norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }

    /// Denominator of the radius-of-curvature formula.
    pub fn curvature_denominator(&self) -> f64 {
        self.fxx * self.fy * self.fy - 2.0 * self.fxy * self.fx * self.fy
            + self.fyy * self.fx * self.fx
    }
}

/// Plain f64 coefficient grid, row i = x-exponent, column j = y-exponent.
#[derive(Debug, Clone, PartialEq)]
struct Grid64 {
    nx: usize,
    ny: usize,
    c: Vec<f64>,
}

impl Grid64 {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for i in (0..self.nx).rev() {
            let row = &self.c[i * self.ny..(i + 1) * self.ny];
            let mut r = 0.0;
            for &cj in row.iter().rev() {
                r = r * y + cj;
            }
            acc = acc * x + r;
        }
        acc
    }

    /// Same Horner walk over |c_ij| |x|^i |y|^j; the natural magnitude of the
    /// evaluation, used to make every tolerance in the crate scale-invariant.
    fn eval_abs(&self, x: f64, y: f64) -> f64 {
        let (ax, ay) = (x.abs(), y.abs());
        let mut acc = 0.0;
        for i in (0..self.nx).rev() {
            let row = &self.c[i * self.ny..(i + 1) * self.ny];
            let mut r = 0.0;
            for &cj in row.iter().rev() {
                r = r * ay + cj.abs();
            }
            acc = acc * ax + r;
        }
        acc
    }
}

/// Dense bivariate polynomial over the rationals.
///
/// Invariants: trailing all-zero rows and columns are trimmed, `degree` is
/// the maximal i+j over nonzero coefficients, and every coefficient is
/// finite. The zero polynomial is stored as a single zero coefficient.
#[derive(Clone)]
pub struct Poly2 {
    nx: usize,
    ny: usize,
    coeffs: Vec<BigRational>,
    grid: Grid64,
    dx: Grid64,
    dy: Grid64,
    dxx: Grid64,
    dxy: Grid64,
    dyy: Grid64,
    degree: usize,
    hessian_cache: OnceLock<Arc<Poly2>>,
}

impl PartialEq for Poly2 {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly2({self})")
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

fn rational_diff_grid(
    coeffs: &[BigRational],
    nx: usize,
    ny: usize,
    var: Var,
) -> (Vec<BigRational>, usize, usize) {
    match var {
        Var::X => {
            if nx <= 1 {
                return (vec![BigRational::zero()], 1, 1);
            }
            let mut out = vec![BigRational::zero(); (nx - 1) * ny];
            for i in 1..nx {
                for j in 0..ny {
                    out[(i - 1) * ny + j] =
                        &coeffs[i * ny + j] * BigRational::from(BigInt::from(i));
                }
            }
            (out, nx - 1, ny)
        }
        Var::Y => {
            if ny <= 1 {
                return (vec![BigRational::zero()], 1, 1);
            }
            let mut out = vec![BigRational::zero(); nx * (ny - 1)];
            for i in 0..nx {
                for j in 1..ny {
                    out[i * (ny - 1) + (j - 1)] =
                        &coeffs[i * ny + j] * BigRational::from(BigInt::from(j));
                }
            }
            (out, nx, ny - 1)
        }
    }
}

fn trim(coeffs: Vec<BigRational>, nx: usize, ny: usize) -> (Vec<BigRational>, usize, usize) {
    let mut max_i = 0;
    let mut max_j = 0;
    let mut any = false;
    for i in 0..nx {
        for j in 0..ny {
            if !coeffs[i * ny + j].is_zero() {
                any = true;
                max_i = max_i.max(i);
                max_j = max_j.max(j);
            }
        }
    }
    if !any {
        return (vec![BigRational::zero()], 1, 1);
    }
    let (tnx, tny) = (max_i + 1, max_j + 1);
    if (tnx, tny) == (nx, ny) {
        return (coeffs, nx, ny);
    }
    let mut out = Vec::with_capacity(tnx * tny);
    for i in 0..tnx {
        for j in 0..tny {
            out.push(coeffs[i * ny + j].clone());
        }
    }
    (out, tnx, tny)
}

impl Poly2 {
    /// Build from a rational coefficient grid; trims and caches derivatives.
    pub fn from_rational_grid(coeffs: Vec<BigRational>, nx: usize, ny: usize) -> Self {
        assert_eq!(coeffs.len(), nx * ny, "coefficient grid shape mismatch");
        let (coeffs, nx, ny) = trim(coeffs, nx, ny);
        let mut degree = 0;
        for i in 0..nx {
            for j in 0..ny {
                if !coeffs[i * ny + j].is_zero() {
                    degree = degree.max(i + j);
                }
            }
        }
        let to_grid = |c: &[BigRational], nx: usize, ny: usize| Grid64 {
            nx,
            ny,
            c: c.iter().map(rat_to_f64).collect(),
        };
        let grid = to_grid(&coeffs, nx, ny);
        let (dx, dxn, dxm) = rational_diff_grid(&coeffs, nx, ny, Var::X);
        let (dy, dyn_, dym) = rational_diff_grid(&coeffs, nx, ny, Var::Y);
        let (dxx, dxxn, dxxm) = rational_diff_grid(&dx, dxn, dxm, Var::X);
        let (dxy, dxyn, dxym) = rational_diff_grid(&dx, dxn, dxm, Var::Y);
        let (dyy, dyyn, dyym) = rational_diff_grid(&dy, dyn_, dym, Var::Y);
        Poly2 {
            grid,
            dx: to_grid(&dx, dxn, dxm),
            dy: to_grid(&dy, dyn_, dym),
            dxx: to_grid(&dxx, dxxn, dxxm),
            dxy: to_grid(&dxy, dxyn, dxym),
            dyy: to_grid(&dyy, dyyn, dyym),
            coeffs,
            nx,
            ny,
            degree,
            hessian_cache: OnceLock::new(),
        }
    }

    /// Build from sparse (x-exponent, y-exponent, value) terms. Every f64 is
    /// an exact rational, so no precision is lost here.
    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Self {
        let nx = terms.iter().map(|t| t.0).max().unwrap_or(0) + 1;
        let ny = terms.iter().map(|t| t.1).max().unwrap_or(0) + 1;
        let mut coeffs = vec![BigRational::zero(); nx * ny];
        for &(i, j, v) in terms {
            coeffs[i * ny + j] += BigRational::from_float(v).expect("non-finite coefficient");
        }
        Poly2::from_rational_grid(coeffs, nx, ny)
    }

    pub fn zero() -> Self {
        Poly2::from_rational_grid(vec![BigRational::zero()], 1, 1)
    }

    pub fn constant(c: BigRational) -> Self {
        Poly2::from_rational_grid(vec![c], 1, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> BigRational {
        if i < self.nx && j < self.ny {
            self.coeffs[i * self.ny + j].clone()
        } else {
            BigRational::zero()
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.grid.eval(p.x, p.y)
    }

    /// Magnitude scale of the evaluation at `p`; see [`ON_CURVE_TOL`].
    pub fn scale(&self, p: Point) -> f64 {
        self.grid.eval_abs(p.x, p.y)
    }

    /// Magnitude scale of the gradient evaluation at `p`.
    pub fn grad_scale(&self, p: Point) -> f64 {
        self.dx.eval_abs(p.x, p.y) + self.dy.eval_abs(p.x, p.y)
    }

    /// Value and all partials through order two, evaluated from the exact
    /// derivative grids. Bit-identical to evaluating `poly_diff` results.
    pub fn jet(&self, p: Point) -> Jet2 {
        Jet2 {
            f: self.grid.eval(p.x, p.y),
            fx: self.dx.eval(p.x, p.y),
            fy: self.dy.eval(p.x, p.y),
            fxx: self.dxx.eval(p.x, p.y),
            fxy: self.dxy.eval(p.x, p.y),
            fyy: self.dyy.eval(p.x, p.y),
        }
    }

    pub fn grad(&self, p: Point) -> crate::geom::Vec2 {
        crate::geom::Vec2::new(self.dx.eval(p.x, p.y), self.dy.eval(p.x, p.y))
    }

    pub fn diff(&self, var: Var) -> Poly2 {
        let (c, nx, ny) = rational_diff_grid(&self.coeffs, self.nx, self.ny, var);
        Poly2::from_rational_grid(c, nx, ny)
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let nx = self.nx.max(other.nx);
        let ny = self.ny.max(other.ny);
        let mut coeffs = vec![BigRational::zero(); nx * ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                coeffs[i * ny + j] += &self.coeffs[i * self.ny + j];
            }
        }
        for i in 0..other.nx {
            for j in 0..other.ny {
                coeffs[i * ny + j] += &other.coeffs[i * other.ny + j];
            }
        }
        Poly2::from_rational_grid(coeffs, nx, ny)
    }

    pub fn sub(&self, other: &Poly2) -> Poly2 {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly2 {
        Poly2::from_rational_grid(self.coeffs.iter().map(|c| -c).collect(), self.nx, self.ny)
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        if self.is_zero() || other.is_zero() {
            return Poly2::zero();
        }
        let nx = self.nx + other.nx - 1;
        let ny = self.ny + other.ny - 1;
        let mut coeffs = vec![BigRational::zero(); nx * ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                let a = &self.coeffs[i * self.ny + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.nx {
                    for l in 0..other.ny {
                        let b = &other.coeffs[k * other.ny + l];
                        if b.is_zero() {
                            continue;
                        }
                        coeffs[(i + k) * ny + (j + l)] += a * b;
                    }
                }
            }
        }
        Poly2::from_rational_grid(coeffs, nx, ny)
    }

    pub fn scale_by(&self, c: &BigRational) -> Poly2 {
        Poly2::from_rational_grid(
            self.coeffs.iter().map(|a| a * c).collect(),
            self.nx,
            self.ny,
        )
    }

    /// Homogenize to total degree `d` by padding each monomial with z^(d-i-j).
    pub fn homogenize(&self, d: usize) -> Result<Poly3, PolyError> {
        if d < self.degree {
            return Err(PolyError::Degree { required: self.degree, actual: d });
        }
        let n = d + 1;
        let mut coeffs = vec![BigRational::zero(); n * n * n];
        for i in 0..self.nx {
            for j in 0..self.ny {
                let c = &self.coeffs[i * self.ny + j];
                if !c.is_zero() {
                    let k = d - i - j;
                    coeffs[(i * n + j) * n + k] = c.clone();
                }
            }
        }
        Ok(Poly3::from_rational_grid(coeffs, n, n, n))
    }

    /// Determinant of the 3x3 Hessian of the degree-d homogenization,
    /// restricted to the affine chart z = 1. Cached on first use.
    pub fn hessian_det_z1(&self) -> Arc<Poly2> {
        self.hessian_cache
            .get_or_init(|| {
                let f3 = self
                    .homogenize(self.degree)
                    .expect("homogenize at own degree cannot fail");
                let h = f3.hessian_det();
                Arc::new(h.dehomogenize_z1())
            })
            .clone()
    }

    /// Iterate nonzero terms as (i, j, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> {
        let ny = self.ny;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(idx, c)| (idx / ny, idx % ny, c))
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Descending total degree, then descending x-exponent; the butterfly
        // prints exactly in its customary order.
        let mut terms: Vec<(usize, usize, &BigRational)> = self.terms().collect();
        terms.sort_by(|a, b| (b.0 + b.1, b.0).cmp(&(a.0 + a.1, a.0)));
        for (idx, (i, j, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let one = mag.is_one();
            let mut wrote = false;
            if !one || (*i == 0 && *j == 0) {
                if mag.is_integer() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "({}/{})", mag.numer(), mag.denom())?;
                }
                wrote = true;
            }
            for (var, e) in [("x", *i), ("y", *j)] {
                if e == 0 {
                    continue;
                }
                if wrote {
                    write!(f, "*")?;
                }
                write!(f, "{var}")?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
                wrote = true;
            }
        }
        Ok(())
    }
}

/// Dense trivariate polynomial over the rationals, used for homogenized
/// curves and their Hessians.
#[derive(Clone, PartialEq)]
pub struct Poly3 {
    nx: usize,
    ny: usize,
    nz: usize,
    coeffs: Vec<BigRational>,
    fc: Vec<f64>,
    /// `Some(d)` when every nonzero monomial has total degree d.
    pub homogeneous_degree: Option<usize>,
}

impl fmt::Debug for Poly3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Poly3[{}x{}x{}, homogeneous: {:?}]",
            self.nx, self.ny, self.nz, self.homogeneous_degree
        )
    }
}

impl Poly3 {
    pub fn from_rational_grid(coeffs: Vec<BigRational>, nx: usize, ny: usize, nz: usize) -> Self {
        assert_eq!(coeffs.len(), nx * ny * nz);
        let mut degrees = std::collections::BTreeSet::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if !coeffs[(i * ny + j) * nz + k].is_zero() {
                        degrees.insert(i + j + k);
                    }
                }
            }
        }
        let homogeneous_degree = if degrees.len() == 1 {
            degrees.into_iter().next()
        } else {
            None
        };
        let fc = coeffs.iter().map(rat_to_f64).collect();
        Poly3 { nx, ny, nz, coeffs, fc, homogeneous_degree }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        let mut acc = 0.0;
        for i in (0..self.nx).rev() {
            let mut ryz = 0.0;
            for j in (0..self.ny).rev() {
                let row = &self.fc[(i * self.ny + j) * self.nz..(i * self.ny + j + 1) * self.nz];
                let mut rz = 0.0;
                for &ck in row.iter().rev() {
                    rz = rz * z + ck;
                }
                ryz = ryz * y + rz;
            }
            acc = acc * x + ryz;
        }
        acc
    }

    pub fn diff(&self, var: Var3) -> Poly3 {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        match var {
            Var3::X => {
                if nx <= 1 {
                    return Poly3::from_rational_grid(vec![BigRational::zero()], 1, 1, 1);
                }
                let mut out = vec![BigRational::zero(); (nx - 1) * ny * nz];
                for i in 1..nx {
                    for j in 0..ny {
                        for k in 0..nz {
                            out[((i - 1) * ny + j) * nz + k] =
                                &self.coeffs[idx(i, j, k)] * BigRational::from(BigInt::from(i));
                        }
                    }
                }
                Poly3::from_rational_grid(out, nx - 1, ny, nz)
            }
            Var3::Y => {
                if ny <= 1 {
                    return Poly3::from_rational_grid(vec![BigRational::zero()], 1, 1, 1);
                }
                let mut out = vec![BigRational::zero(); nx * (ny - 1) * nz];
                for i in 0..nx {
                    for j in 1..ny {
                        for k in 0..nz {
                            out[(i * (ny - 1) + (j - 1)) * nz + k] =
                                &self.coeffs[idx(i, j, k)] * BigRational::from(BigInt::from(j));
                        }
                    }
                }
                Poly3::from_rational_grid(out, nx, ny - 1, nz)
            }
            Var3::Z => {
                if nz <= 1 {
                    return Poly3::from_rational_grid(vec![BigRational::zero()], 1, 1, 1);
                }
                let mut out = vec![BigRational::zero(); nx * ny * (nz - 1)];
                for i in 0..nx {
                    for j in 0..ny {
                        for k in 1..nz {
                            out[(i * ny + j) * (nz - 1) + (k - 1)] =
                                &self.coeffs[idx(i, j, k)] * BigRational::from(BigInt::from(k));
                        }
                    }
                }
                Poly3::from_rational_grid(out, nx, ny, nz - 1)
            }
        }
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let nx = self.nx.max(other.nx);
        let ny = self.ny.max(other.ny);
        let nz = self.nz.max(other.nz);
        let mut coeffs = vec![BigRational::zero(); nx * ny * nz];
        for p in [self, other] {
            for i in 0..p.nx {
                for j in 0..p.ny {
                    for k in 0..p.nz {
                        coeffs[(i * ny + j) * nz + k] +=
                            &p.coeffs[(i * p.ny + j) * p.nz + k];
                    }
                }
            }
        }
        Poly3::from_rational_grid(coeffs, nx, ny, nz)
    }

    pub fn sub(&self, other: &Poly3) -> Poly3 {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly3 {
        Poly3::from_rational_grid(
            self.coeffs.iter().map(|c| -c).collect(),
            self.nx,
            self.ny,
            self.nz,
        )
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        if self.is_zero() || other.is_zero() {
            return Poly3::from_rational_grid(vec![BigRational::zero()], 1, 1, 1);
        }
        let nx = self.nx + other.nx - 1;
        let ny = self.ny + other.ny - 1;
        let nz = self.nz + other.nz - 1;
        let mut coeffs = vec![BigRational::zero(); nx * ny * nz];
        for i in 0..self.nx {
            for j in 0..self.ny {
                for k in 0..self.nz {
                    let a = &self.coeffs[(i * self.ny + j) * self.nz + k];
                    if a.is_zero() {
                        continue;
                    }
                    for u in 0..other.nx {
                        for v in 0..other.ny {
                            for w in 0..other.nz {
                                let b = &other.coeffs[(u * other.ny + v) * other.nz + w];
                                if b.is_zero() {
                                    continue;
                                }
                                coeffs[((i + u) * ny + (j + v)) * nz + (k + w)] += a * b;
                            }
                        }
                    }
                }
            }
        }
        Poly3::from_rational_grid(coeffs, nx, ny, nz)
    }

    /// Restrict to the affine chart z = 1.
    pub fn dehomogenize_z1(&self) -> Poly2 {
        let mut coeffs = vec![BigRational::zero(); self.nx * self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                let mut acc = BigRational::zero();
                for k in 0..self.nz {
                    acc += &self.coeffs[(i * self.ny + j) * self.nz + k];
                }
                coeffs[i * self.ny + j] = acc;
            }
        }
        Poly2::from_rational_grid(coeffs, self.nx, self.ny)
    }

    /// Determinant of the symmetric 3x3 Hessian matrix of second partials.
    pub fn hessian_det(&self) -> Poly3 {
        let fxx = self.diff(Var3::X).diff(Var3::X);
        let fxy = self.diff(Var3::X).diff(Var3::Y);
        let fxz = self.diff(Var3::X).diff(Var3::Z);
        let fyy = self.diff(Var3::Y).diff(Var3::Y);
        let fyz = self.diff(Var3::Y).diff(Var3::Z);
        let fzz = self.diff(Var3::Z).diff(Var3::Z);
        // fxx fyy fzz - fxx fyz^2 - fyy fxz^2 - fzz fxy^2 + 2 fyz fxz fxy
        let t1 = fxx.mul(&fyy).mul(&fzz);
        let t2 = fxx.mul(&fyz.mul(&fyz));
        let t3 = fyy.mul(&fxz.mul(&fxz));
        let t4 = fzz.mul(&fxy.mul(&fxy));
        let t5 = fyz.mul(&fxz).mul(&fxy);
        let two = Poly3::from_rational_grid(vec![BigRational::from(BigInt::from(2))], 1, 1, 1);
        t1.sub(&t2).sub(&t3).sub(&t4).add(&two.mul(&t5))
    }
}

/// G = (Fx^2+Fy^2)(Fy Hx - Fx Hy) - 3 H [(Fxx - Fyy) Fx Fy + Fxy (Fy^2 - Fx^2)],
/// whose on-curve zeros are the critical points of curvature. Degree 6d-10
/// for generic curves of degree d >= 3.
///
/// Rejects degree < 3: lines and circles have identically vanishing (or
/// empty) critical loci and are excluded from the degree statement.
pub fn critical_curvature_poly(p: &Poly2) -> Result<Poly2, PolyError> {
    if p.degree() < 3 {
        return Err(PolyError::Degree { required: 3, actual: p.degree() });
    }
    Ok(critical_curvature_raw(p))
}

/// Same construction without the degree gate. Well defined for conics too
/// (the ellipse yields -9xy, cutting out its four vertices); identically
/// zero exactly for circles and lines.
pub(crate) fn critical_curvature_raw(p: &Poly2) -> Poly2 {
    let h = p.hessian_det_z1();
    let fx = p.diff(Var::X);
    let fy = p.diff(Var::Y);
    let fxx = fx.diff(Var::X);
    let fxy = fx.diff(Var::Y);
    let fyy = fy.diff(Var::Y);
    let hx = h.diff(Var::X);
    let hy = h.diff(Var::Y);
    let grad_sq = fx.mul(&fx).add(&fy.mul(&fy));
    let lhs = grad_sq.mul(&fy.mul(&hx).sub(&fx.mul(&hy)));
    let bracket = fxx
        .sub(&fyy)
        .mul(&fx.mul(&fy))
        .add(&fxy.mul(&fy.mul(&fy).sub(&fx.mul(&fx))));
    let three = Poly2::constant(BigRational::from(BigInt::from(3)));
    lhs.sub(&three.mul(&h).mul(&bracket))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn butterfly() -> Poly2 {
        parse_poly("x^4 - x^2*y^2 + y^4 - 4*x^2 - 2*y^2 - x - 4*y + 1").unwrap()
    }

    #[test]
    fn parse_butterfly_coefficients() {
        let b = butterfly();
        assert_eq!(b.degree(), 4);
        assert_eq!(b.coeff(4, 0), BigRational::one());
        assert_eq!(b.coeff(2, 2), -BigRational::one());
        assert_eq!(b.coeff(0, 4), BigRational::one());
        assert_eq!(b.coeff(2, 0), BigRational::from(BigInt::from(-4)));
        assert_eq!(b.coeff(0, 2), BigRational::from(BigInt::from(-2)));
        assert_eq!(b.coeff(1, 0), BigRational::from(BigInt::from(-1)));
        assert_eq!(b.coeff(0, 1), BigRational::from(BigInt::from(-4)));
        assert_eq!(b.coeff(0, 0), BigRational::one());
    }

    #[test]
    fn jet_matches_trivial_cases() {
        let circle = parse_poly("x^2 + y^2 - 1").unwrap();
        let j = circle.jet(Point::new(1.0, 0.0));
        assert_eq!((j.f, j.fx, j.fy), (0.0, 2.0, 0.0));
        assert_eq!((j.fxx, j.fxy, j.fyy), (2.0, 0.0, 2.0));

        let ellipse = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        let j = ellipse.jet(Point::new(2.0, 0.0));
        assert_eq!((j.f, j.fx, j.fy), (0.0, 1.0, 0.0));

        let j = butterfly().jet(Point::new(0.0, 0.0));
        assert_eq!((j.f, j.fx, j.fy), (1.0, -1.0, -4.0));
    }

    #[test]
    fn jet_equals_derivative_polynomials_exactly() {
        let b = butterfly();
        let fx = b.diff(Var::X);
        let fy = b.diff(Var::Y);
        let fxy = fx.diff(Var::Y);
        for &(x, y) in &[(0.3, -1.7), (2.1, 0.9), (-1.25, -0.5)] {
            let p = Point::new(x, y);
            let j = b.jet(p);
            // Same rational grids, same Horner order: bit-identical.
            assert_eq!(j.fx, fx.eval(p));
            assert_eq!(j.fy, fy.eval(p));
            assert_eq!(j.fxy, fxy.eval(p));
        }
    }

    #[test]
    fn diff_butterfly_x() {
        let dx = butterfly().diff(Var::X);
        let expected = parse_poly("4*x^3 - 2*x*y^2 - 8*x - 1").unwrap();
        assert_eq!(dx, expected);
    }

    #[test]
    fn mul_difference_of_squares() {
        let a = parse_poly("x + y").unwrap();
        let b = parse_poly("x - y").unwrap();
        assert_eq!(a.mul(&b), parse_poly("x^2 - y^2").unwrap());
    }

    #[test]
    fn diff_simple_monomial() {
        let p = parse_poly("x^2*y").unwrap();
        assert_eq!(p.diff(Var::X), parse_poly("2*x*y").unwrap());
    }

    #[test]
    fn mul_degree_additive() {
        let a = parse_poly("x^3 + y - 2").unwrap();
        let b = parse_poly("x*y^2 + 1").unwrap();
        assert_eq!(a.mul(&b).degree(), a.degree() + b.degree());
    }

    #[test]
    fn homogenize_circle_and_butterfly() {
        let circle = parse_poly("x^2 + y^2 - 1").unwrap();
        let h = circle.homogenize(2).unwrap();
        assert_eq!(h.homogeneous_degree, Some(2));
        assert_eq!(h.eval(1.0, 1.0, 1.0), 1.0);
        assert_eq!(h.dehomogenize_z1(), circle);

        let b = butterfly();
        let h = b.homogenize(4).unwrap();
        assert_eq!(h.homogeneous_degree, Some(4));
        assert_eq!(h.dehomogenize_z1(), b);

        let line = parse_poly("x + y").unwrap();
        let h = line.homogenize(3).unwrap();
        assert_eq!(h.homogeneous_degree, Some(3));
        // x z^2 + y z^2
        assert_eq!(h.eval(1.0, 0.0, 2.0), 4.0);
        assert_eq!(h.eval(0.0, 1.0, 3.0), 9.0);

        assert_eq!(
            parse_poly("x^2+y^2-1").unwrap().homogenize(1),
            Err(PolyError::Degree { required: 2, actual: 1 })
        );
    }

    #[test]
    fn critical_curvature_degree_is_14_for_butterfly() {
        let g = critical_curvature_poly(&butterfly()).unwrap();
        assert_eq!(g.degree(), 14); // 6*4 - 10
    }

    #[test]
    fn critical_curvature_rejects_circle() {
        let circle = parse_poly("x^2 + y^2 - 1").unwrap();
        assert_eq!(
            critical_curvature_poly(&circle),
            Err(PolyError::Degree { required: 3, actual: 2 })
        );
        // Constant curvature: the raw construction vanishes identically.
        assert!(critical_curvature_raw(&circle).is_zero());
    }

    #[test]
    fn critical_curvature_raw_ellipse_is_vertex_locus() {
        let ellipse = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        let g = critical_curvature_raw(&ellipse);
        assert_eq!(g, parse_poly("0 - 9*x*y").unwrap());
    }

    #[test]
    fn display_round_trip_and_butterfly_format() {
        let b = butterfly();
        assert_eq!(
            b.to_string(),
            "x^4 - x^2*y^2 + y^4 - 4*x^2 - 2*y^2 - x - 4*y + 1"
        );
        assert_eq!(parse_poly(&b.to_string()).unwrap(), b);
        let e = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        assert_eq!(parse_poly(&e.to_string()).unwrap(), e);
    }
}
