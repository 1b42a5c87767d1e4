//! Delaunay triangulation of a finite point set and its Voronoi dual.
//!
//! Construction is incremental Bowyer-Watson over a triangulation augmented
//! with ghost triangles: every hull edge (a, b), taken counterclockwise with
//! the interior on its left, carries a companion triangle (b, a, GHOST). A
//! point falls in a ghost's "circumdisc" when it lies strictly beyond the
//! hull edge, or exactly on the open edge. Treating ghosts uniformly lets one
//! cavity excavation handle interior and exterior insertions alike, with no
//! super-triangle to distort the hull.
//!
//! Sites are sorted lexicographically and deduplicated before insertion, so
//! the output is independent of input order. Exactly cocircular quads are
//! then normalized by flipping to the lexicographically smallest diagonal,
//! which pins down the one remaining ambiguity.
//!
//! The paraboloid lift z = x^2 + y^2 connects the triangulation to convex
//! geometry: a triangle is Delaunay exactly when the plane through its three
//! lifted vertices supports the lifted point set from below.
//! [`verify_lower_hull`] checks that statement directly and is used as an
//! independent oracle in tests.

pub mod predicates;
mod voronoi;

pub use voronoi::{
    EdgeClass, EdgeGeometry, VorCell, VorEdge, VoronoiDiagram,
};

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

use crate::geom::Point;
use predicates::{circumcircle, incircle, orient2d};

const GHOST: usize = usize::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum DelaunayError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// A point lifted onto the standard paraboloid z = x^2 + y^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Lift sites onto the paraboloid.
pub fn lift(sites: &[Point]) -> Vec<LiftedPoint> {
    sites
        .iter()
        .map(|p| LiftedPoint { x: p.x, y: p.y, z: p.x * p.x + p.y * p.y })
        .collect()
}

/// Delaunay triangulation: sites in canonical (lexicographic) order,
/// counterclockwise triangles, adjacency, and per-triangle circumdata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub sites: Vec<Point>,
    /// Vertex index triples, counterclockwise, smallest index first.
    pub triangles: Vec<[usize; 3]>,
    /// `neighbors[t][k]` is the triangle sharing edge (v[k], v[k+1]) of
    /// triangle t, or `None` on the hull.
    pub neighbors: Vec<[Option<usize>; 3]>,
    pub circumcenters: Vec<Point>,
    pub circumradii: Vec<f64>,
    /// Hull edges (a, b), counterclockwise, interior on the left.
    pub hull_edges: Vec<(usize, usize)>,
}

impl Triangulation {
    /// Triangle index for every directed interior edge (u, v).
    pub(crate) fn directed_edge_map(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                m.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        m
    }

    pub fn scale(&self) -> f64 {
        crate::geom::BoundingBox::around(&self.sites, 0.0)
            .map(|b| b.diagonal())
            .unwrap_or(1.0)
    }
}

fn canonical(mut t: (usize, usize, usize)) -> (usize, usize, usize) {
    // Rotate (orientation preserved) so the smallest vertex leads.
    while t.0 > t.1 || t.0 > t.2 {
        t = (t.1, t.2, t.0);
    }
    t
}

struct Mesh<'a> {
    pts: &'a [Point],
    /// Directed edge (u, v) -> opposite vertex w of triangle (u, v, w).
    edge: HashMap<(usize, usize), usize>,
    tris: HashSet<(usize, usize, usize)>,
    /// Last triangle created; the walk starts here. Sorted insertion keeps
    /// consecutive points close, so walks are short.
    hint: (usize, usize, usize),
}

impl<'a> Mesh<'a> {
    fn add(&mut self, u: usize, v: usize, w: usize) {
        self.edge.insert((u, v), w);
        self.edge.insert((v, w), u);
        self.edge.insert((w, u), v);
        self.tris.insert(canonical((u, v, w)));
        self.hint = canonical((u, v, w));
    }

    fn remove(&mut self, u: usize, v: usize, w: usize) {
        self.edge.remove(&(u, v));
        self.edge.remove(&(v, w));
        self.edge.remove(&(w, u));
        self.tris.remove(&canonical((u, v, w)));
    }

    /// Ghost circumdisc membership: strictly beyond the hull edge, or on its
    /// open interior. Collinear-beyond points are *not* members; they are
    /// picked up by the neighboring ghost at the extreme vertex, which keeps
    /// every created real triangle strictly positively oriented.
    fn in_ghost_disc(&self, u: usize, v: usize, p: Point) -> bool {
        let (a, b) = (self.pts[u], self.pts[v]);
        let o = orient2d(a, b, p);
        if o > 0.0 {
            return true;
        }
        if o < 0.0 {
            return false;
        }
        ((p - a).dot(b - a) > 0.0) && ((p - b).dot(a - b) > 0.0)
    }

    fn in_disc(&self, tri: (usize, usize, usize), p: Point) -> bool {
        let (u, v, w) = tri;
        if w == GHOST {
            self.in_ghost_disc(u, v, p)
        } else if v == GHOST {
            self.in_ghost_disc(w, u, p)
        } else if u == GHOST {
            self.in_ghost_disc(v, w, p)
        } else {
            incircle(self.pts[u], self.pts[v], self.pts[w], p) > 0.0
        }
    }

    /// Visibility walk from the hint toward `p`, ending at a triangle whose
    /// circumdisc contains it. Walks terminate on Delaunay triangulations;
    /// the capped fallback scan covers degenerate wanderings.
    fn locate(&self, p: Point) -> (usize, usize, usize) {
        let mut cur = if self.tris.contains(&self.hint) {
            self.hint
        } else {
            *self.tris.iter().next().expect("mesh has triangles")
        };
        let max_steps = 4 * self.tris.len() + 32;
        for _ in 0..max_steps {
            let (u, v, w) = cur;
            if u == GHOST || v == GHOST || w == GHOST {
                if self.in_disc(cur, p) {
                    return cur;
                }
                // Step inward across the hull edge.
                let (b, a) = if w == GHOST {
                    (u, v)
                } else if v == GHOST {
                    (w, u)
                } else {
                    (v, w)
                };
                let inner = self.edge[&(a, b)];
                cur = canonical((a, b, inner));
                continue;
            }
            let mut crossed = false;
            for (s, t) in [(u, v), (v, w), (w, u)] {
                if orient2d(self.pts[s], self.pts[t], p) < 0.0 {
                    let opp = self.edge[&(t, s)];
                    cur = canonical((t, s, opp));
                    crossed = true;
                    break;
                }
            }
            if !crossed {
                // All orientations nonnegative: p is in the closed triangle,
                // hence inside its circumdisc.
                return cur;
            }
        }
        self.tris
            .iter()
            .copied()
            .find(|&t| self.in_disc(t, p))
            .expect("point conflicts with no triangle; duplicate sites must be removed first")
    }

    fn insert(&mut self, ip: usize) {
        let p = self.pts[ip];
        let start = self.locate(p);
        debug_assert!(self.in_disc(start, p));
        // Excavate the connected cavity of conflicting triangles.
        let mut cavity: HashSet<(usize, usize, usize)> = HashSet::new();
        let mut stack = vec![start];
        cavity.insert(start);
        while let Some((u, v, w)) = stack.pop() {
            for (a, b) in [(u, v), (v, w), (w, u)] {
                if let Some(&c) = self.edge.get(&(b, a)) {
                    let t = canonical((b, a, c));
                    if !cavity.contains(&t) && self.in_disc(t, p) {
                        cavity.insert(t);
                        stack.push(t);
                    }
                }
            }
        }
        // Boundary edges of the cavity, then fan them to the new vertex.
        let mut boundary = Vec::new();
        for &(u, v, w) in &cavity {
            for (a, b) in [(u, v), (v, w), (w, u)] {
                let outside = match self.edge.get(&(b, a)) {
                    Some(&c) => !cavity.contains(&canonical((b, a, c))),
                    None => true,
                };
                if outside {
                    boundary.push((a, b));
                }
            }
        }
        for &(u, v, w) in &cavity.clone() {
            self.remove(u, v, w);
        }
        for (a, b) in boundary {
            self.add(a, b, ip);
        }
    }
}

/// Delaunay triangulation of the sites. Duplicates are merged; fewer than
/// three distinct sites or an entirely collinear set is rejected.
pub fn delaunay_triangulate(sites: &[Point]) -> Result<Triangulation, DelaunayError> {
    let mut pts: Vec<Point> = sites.to_vec();
    pts.sort_by(Point::lex_cmp);
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 3 {
        return Err(DelaunayError::DegenerateInput("fewer than 3 distinct sites"));
    }
    // First strictly non-collinear triple (p0, p1, pk).
    let mut k = None;
    for i in 2..pts.len() {
        if orient2d(pts[0], pts[1], pts[i]) != 0.0 {
            k = Some(i);
            break;
        }
    }
    let k = k.ok_or(DelaunayError::DegenerateInput("all sites collinear"))?;

    let mut mesh = Mesh {
        pts: &pts,
        edge: HashMap::new(),
        tris: HashSet::new(),
        hint: (0, 0, 0),
    };
    let (i0, i1, i2) = if orient2d(pts[0], pts[1], pts[k]) > 0.0 {
        (0, 1, k)
    } else {
        (1, 0, k)
    };
    mesh.add(i0, i1, i2);
    mesh.add(i1, i0, GHOST);
    mesh.add(i2, i1, GHOST);
    mesh.add(i0, i2, GHOST);
    for i in 2..pts.len() {
        if i != k {
            mesh.insert(i);
        }
    }

    normalize_cocircular(&mut mesh);

    // Extract real triangles in deterministic order.
    let mut triangles: Vec<[usize; 3]> = mesh
        .tris
        .iter()
        .filter(|t| t.0 != GHOST && t.1 != GHOST && t.2 != GHOST)
        .map(|&(u, v, w)| [u, v, w])
        .collect();
    triangles.sort();

    let mut tri_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for kk in 0..3 {
            tri_of_edge.insert((tri[kk], tri[(kk + 1) % 3]), t);
        }
    }
    let mut neighbors = vec![[None; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for kk in 0..3 {
            neighbors[t][kk] = tri_of_edge.get(&(tri[(kk + 1) % 3], tri[kk])).copied();
        }
    }
    let mut circumcenters = Vec::with_capacity(triangles.len());
    let mut circumradii = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let (c, r) = circumcircle(pts[tri[0]], pts[tri[1]], pts[tri[2]]);
        circumcenters.push(c);
        circumradii.push(r);
    }
    let mut hull_edges: Vec<(usize, usize)> = mesh
        .tris
        .iter()
        .filter(|t| t.2 == GHOST || t.1 == GHOST || t.0 == GHOST)
        .map(|&(u, v, w)| {
            // Ghost (b, a, GHOST) marks hull edge a -> b.
            let (b, a) = if w == GHOST {
                (u, v)
            } else if u == GHOST {
                (v, w)
            } else {
                (w, u)
            };
            (a, b)
        })
        .collect();
    hull_edges.sort();

    Ok(Triangulation {
        sites: pts,
        triangles,
        neighbors,
        circumcenters,
        circumradii,
        hull_edges,
    })
}

/// Flip exactly-cocircular interior edges until every such quad uses its
/// lexicographically smallest diagonal. Indices order matches coordinate
/// order because sites are sorted.
fn normalize_cocircular(mesh: &mut Mesh<'_>) {
    loop {
        let mut flips: Vec<((usize, usize), (usize, usize))> = Vec::new();
        let mut edges: Vec<(usize, usize)> = mesh
            .edge
            .keys()
            .copied()
            .filter(|&(u, v)| u < v && u != GHOST && v != GHOST)
            .collect();
        edges.sort();
        for (u, v) in edges {
            let (Some(&w1), Some(&w2)) = (mesh.edge.get(&(u, v)), mesh.edge.get(&(v, u))) else {
                continue;
            };
            if w1 == GHOST || w2 == GHOST {
                continue;
            }
            let key_uv = (u.min(v), u.max(v));
            let key_w = (w1.min(w2), w1.max(w2));
            if key_w < key_uv
                && incircle(mesh.pts[u], mesh.pts[v], mesh.pts[w1], mesh.pts[w2]) == 0.0
            {
                flips.push(((u, v), (w1, w2)));
                break; // re-scan after each flip; cocircular groups are tiny
            }
        }
        if flips.is_empty() {
            return;
        }
        for ((u, v), (w1, w2)) in flips {
            mesh.remove(u, v, w1);
            mesh.remove(v, u, w2);
            mesh.add(w2, w1, u);
            mesh.add(w1, w2, v);
        }
    }
}

/// Directly check Proposition-style lower-hull support: for every triangle,
/// the plane through its three lifted vertices must have every other lifted
/// site on or above it (relative tolerance 1e-9).
pub fn verify_lower_hull(t: &Triangulation) -> bool {
    let lifted = lift(&t.sites);
    for tri in &t.triangles {
        let a = lifted[tri[0]];
        let b = lifted[tri[1]];
        let c = lifted[tri[2]];
        // Upward normal of the plane through a, b, c (CCW in the plane).
        let u = (b.x - a.x, b.y - a.y, b.z - a.z);
        let v = (c.x - a.x, c.y - a.y, c.z - a.z);
        let n = (
            u.1 * v.2 - u.2 * v.1,
            u.2 * v.0 - u.0 * v.2,
            u.0 * v.1 - u.1 * v.0,
        );
        let n_norm = (n.0 * n.0 + n.1 * n.1 + n.2 * n.2).sqrt();
        for (s, ls) in lifted.iter().enumerate() {
            if tri.contains(&s) {
                continue;
            }
            let d = (ls.x - a.x, ls.y - a.y, ls.z - a.z);
            let dot = n.0 * d.0 + n.1 * d.1 + n.2 * d.2;
            let scale = n_norm * (d.0 * d.0 + d.1 * d.1 + d.2 * d.2).sqrt();
            if dot < -1e-9 * scale {
                return false;
            }
        }
    }
    true
}

/// Dual construction; see [`voronoi`].
pub fn voronoi_dual(t: &Triangulation) -> VoronoiDiagram {
    voronoi::dual(t)
}
