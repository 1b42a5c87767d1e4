//! Shared fixtures for the benchmark targets.

use curvelab::geom::BoundingBox;
use curvelab::poly2::{parse_poly, Poly2};
use curvelab::sampler::{epsilon_sample, Sample};

pub const BUTTERFLY: &str = "x^4 - x^2*y^2 + y^4 - 4*x^2 - 2*y^2 - x - 4*y + 1";

pub fn butterfly() -> Poly2 {
    parse_poly(BUTTERFLY).unwrap()
}

pub fn window() -> BoundingBox {
    BoundingBox::new(-3.0, 3.0, -3.0, 3.0)
}

pub fn butterfly_sample(eps: f64) -> Sample {
    epsilon_sample(&butterfly(), &window(), eps, &[]).unwrap()
}
