//! Metric features of implicit plane algebraic curves.
//!
//! Given a polynomial F in two variables, this crate samples the real curve
//! V(F), builds Delaunay triangulations and Voronoi diagrams of the samples,
//! and extracts metric features from both sides of that duality: medial-axis
//! approximations, curvature and evolute estimates, bottleneck candidates,
//! and the reach. The same features are also computed exactly by solving the
//! defining polynomial systems (critical curvature, bottleneck pairs) with
//! Newton refinement seeded from the traced curve, so the sample-based
//! estimators can be validated against formula-based ground truth and their
//! convergence measured as the sample density increases.
//!
//! Module layout mirrors the pipeline:
//!
//! - [`poly2`]: polynomial arithmetic, parsing, curvature formulas, residuals
//! - [`sampler`]: epsilon-approximations of V(F) by predictor-corrector tracing
//! - [`delaunay`]: triangulation, paraboloid lift, Voronoi dual
//! - [`features`]: short/long edges, medial approximations, local estimates
//! - [`solver`]: Newton-refined critical points, bottlenecks, singularities
//! - [`reach`]: exact and estimated reach, convergence experiments

pub mod delaunay;
pub mod features;
pub mod geom;
pub mod poly2;
pub mod reach;
pub mod sampler;
pub mod solver;

pub use geom::{BoundingBox, Point, Ray, Vec2};
pub use poly2::{parse_poly, Jet2, Poly2, Poly3};
pub use sampler::Sample;
