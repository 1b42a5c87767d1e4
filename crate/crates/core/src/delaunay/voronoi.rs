//! Voronoi diagram as the combinatorial dual of a Delaunay triangulation.
//!
//! Vertices are circumcenters, one bounded edge per interior Delaunay edge,
//! one outward ray per hull edge. Cells are ordered counterclockwise around
//! their site; hull cells carry exactly two rays. Unbounded cells are never
//! clipped here; clipping belongs to rendering.
//!
//! Consecutive circumcenters closer than 1e-9 of the site-cloud diameter are
//! merged: exactly or nearly cocircular sites (dense circle samples) produce
//! clusters of coincident Voronoi vertices whose zero-length edges carry no
//! geometry. Dropped edges still count as Delaunay adjacencies for the
//! half-plane membership test, which uses all neighbors of a cell.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::Triangulation;
use crate::geom::{point_ray_dist, point_segment_dist, Point, Ray, Vec2};

/// Classification of a Voronoi edge against the curve; set by the features
/// layer, `Unclassified` straight out of the dual construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    Unclassified,
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeGeometry {
    Segment { p: Point, q: Point },
    Ray { origin: Point, dir: Vec2 },
}

/// One Voronoi edge: the locus equidistant from sites `a` and `b` (a < b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VorEdge {
    pub a: usize,
    pub b: usize,
    pub geom: EdgeGeometry,
    pub class: EdgeClass,
}

impl VorEdge {
    /// Midpoint of a segment, or a point one unit along a ray.
    pub fn representative_point(&self) -> Point {
        match self.geom {
            EdgeGeometry::Segment { p, q } => Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0),
            EdgeGeometry::Ray { origin, dir } => origin + dir,
        }
    }
}

/// Voronoi cell of one site: circumcenter chain in counterclockwise order,
/// ids of the surviving boundary edges, and all Delaunay-adjacent sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VorCell {
    pub site: usize,
    pub vertices: Vec<Point>,
    pub edge_ids: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub unbounded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoronoiDiagram {
    pub sites: Vec<Point>,
    pub cells: Vec<VorCell>,
    pub edges: Vec<VorEdge>,
    /// Diameter of the site cloud; the scale behind merge tolerances.
    pub scale: f64,
}

pub(super) fn dual(t: &Triangulation) -> VoronoiDiagram {
    let scale = t.scale();
    let merge_tol = 1e-9 * scale;
    let edge_map = t.directed_edge_map();

    let mut edges: Vec<VorEdge> = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (ti, tri) in t.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match t.neighbors[ti][k] {
                Some(nj) => {
                    if ti < nj {
                        let p = t.circumcenters[ti];
                        let q = t.circumcenters[nj];
                        if p.dist(q) > merge_tol {
                            edge_index.insert(key, edges.len());
                            edges.push(VorEdge {
                                a: key.0,
                                b: key.1,
                                geom: EdgeGeometry::Segment { p, q },
                                class: EdgeClass::Unclassified,
                            });
                        }
                    }
                }
                None => {
                    let d = t.sites[b] - t.sites[a];
                    let dir = Vec2::new(d.y, -d.x).normalized();
                    edge_index.insert(key, edges.len());
                    edges.push(VorEdge {
                        a: key.0,
                        b: key.1,
                        geom: EdgeGeometry::Ray { origin: t.circumcenters[ti], dir },
                        class: EdgeClass::Unclassified,
                    });
                }
            }
        }
    }

    // One incident triangle per site, for starting the rotation walks.
    let mut seed_tri = vec![usize::MAX; t.sites.len()];
    for (ti, tri) in t.triangles.iter().enumerate() {
        for &v in tri {
            if seed_tri[v] == usize::MAX {
                seed_tri[v] = ti;
            }
        }
    }

    let rotate = |ti: usize, s: usize| -> (usize, usize) {
        let tri = t.triangles[ti];
        let k = tri.iter().position(|&v| v == s).expect("site not in its triangle");
        (tri[(k + 1) % 3], tri[(k + 2) % 3])
    };

    let mut cells = Vec::with_capacity(t.sites.len());
    for s in 0..t.sites.len() {
        let t0 = seed_tri[s];
        assert_ne!(t0, usize::MAX, "every site of a valid triangulation has a triangle");
        // Walk clockwise to the hull (or all the way around).
        let mut start = t0;
        let mut unbounded = false;
        loop {
            let (u, _) = rotate(start, s);
            match edge_map.get(&(u, s)) {
                Some(&prev) => {
                    if prev == t0 {
                        break; // interior cell, closed fan
                    }
                    start = prev;
                }
                None => {
                    unbounded = true;
                    break;
                }
            }
        }
        // Collect the fan counterclockwise from `start`.
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            let (_, v) = rotate(cur, s);
            match edge_map.get(&(s, v)) {
                Some(&next) => {
                    if next == start {
                        break;
                    }
                    chain.push(next);
                    cur = next;
                }
                None => break,
            }
        }

        let mut vertices: Vec<Point> = Vec::with_capacity(chain.len());
        for &ti in &chain {
            let c = t.circumcenters[ti];
            if vertices.last().map_or(true, |l: &Point| l.dist(c) > merge_tol) {
                vertices.push(c);
            }
        }
        if !unbounded && vertices.len() > 1 {
            if vertices[0].dist(*vertices.last().unwrap()) <= merge_tol {
                vertices.pop();
            }
        }

        let mut edge_ids = Vec::new();
        let mut neighbors = Vec::new();
        if unbounded {
            let (u0, _) = rotate(start, s);
            neighbors.push(u0);
            if let Some(&id) = edge_index.get(&(s.min(u0), s.max(u0))) {
                edge_ids.push(id);
            }
        }
        for &ti in &chain {
            // Edge shared with the counterclockwise successor; for the last
            // triangle of a hull cell this is the outgoing ray.
            let (_, v) = rotate(ti, s);
            neighbors.push(v);
            if let Some(&id) = edge_index.get(&(s.min(v), s.max(v))) {
                edge_ids.push(id);
            }
        }
        cells.push(VorCell { site: s, vertices, edge_ids, neighbors, unbounded });
    }

    VoronoiDiagram { sites: t.sites.clone(), cells, edges, scale }
}

impl VoronoiDiagram {
    /// Diagram of exactly two distinct sites: two half-planes separated by
    /// the perpendicular bisector, represented as a pair of opposite rays.
    pub fn two_sites(a: Point, b: Point) -> VoronoiDiagram {
        assert!(a != b, "two-site diagram needs distinct sites");
        let (a, b) = if a.lex_cmp(&b).is_le() { (a, b) } else { (b, a) };
        let mid = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let dir = (b - a).rot90().normalized();
        let edges = vec![
            VorEdge {
                a: 0,
                b: 1,
                geom: EdgeGeometry::Ray { origin: mid, dir },
                class: EdgeClass::Unclassified,
            },
            VorEdge {
                a: 0,
                b: 1,
                geom: EdgeGeometry::Ray { origin: mid, dir: -dir },
                class: EdgeClass::Unclassified,
            },
        ];
        let cell = |site: usize| VorCell {
            site,
            vertices: vec![mid],
            edge_ids: vec![0, 1],
            neighbors: vec![1 - site],
            unbounded: true,
        };
        VoronoiDiagram {
            sites: vec![a, b],
            cells: vec![cell(0), cell(1)],
            edges,
            scale: a.dist(b),
        }
    }

    /// Half-plane membership: `p` belongs to the cell iff it is at least as
    /// close to the cell's site as to every Delaunay neighbor (with a small
    /// relative slack for boundary probes).
    pub fn cell_contains(&self, cell: usize, p: Point) -> bool {
        let c = &self.cells[cell];
        let ds = p.dist_sq(self.sites[c.site]);
        let slack = 1e-12 * self.scale * self.scale;
        c.neighbors
            .iter()
            .all(|&n| ds <= p.dist_sq(self.sites[n]) + slack)
    }

    /// The two rays of an unbounded cell, incoming then outgoing.
    pub fn cell_rays(&self, cell: usize) -> Option<(Ray, Ray)> {
        let c = &self.cells[cell];
        if !c.unbounded || c.edge_ids.len() < 2 {
            return None;
        }
        let first = &self.edges[c.edge_ids[0]];
        let last = &self.edges[*c.edge_ids.last().unwrap()];
        match (&first.geom, &last.geom) {
            (
                EdgeGeometry::Ray { origin: o1, dir: d1 },
                EdgeGeometry::Ray { origin: o2, dir: d2 },
            ) => Some((Ray { origin: *o1, dir: *d1 }, Ray { origin: *o2, dir: *d2 })),
            _ => None,
        }
    }

    /// Exact distance from a point to the (convex) cell: zero inside,
    /// otherwise the minimum over boundary segments and rays.
    pub fn cell_distance(&self, cell: usize, p: Point) -> f64 {
        if self.cell_contains(cell, p) {
            return 0.0;
        }
        let c = &self.cells[cell];
        let mut best = f64::INFINITY;
        let vs = &c.vertices;
        for w in vs.windows(2) {
            best = best.min(point_segment_dist(p, w[0], w[1]));
        }
        if c.unbounded {
            if let Some((rin, rout)) = self.cell_rays(cell) {
                best = best.min(point_ray_dist(p, &rin));
                best = best.min(point_ray_dist(p, &rout));
            }
        } else if vs.len() > 2 {
            best = best.min(point_segment_dist(p, *vs.last().unwrap(), vs[0]));
        }
        if vs.len() == 1 && !c.unbounded {
            best = best.min(p.dist(vs[0]));
        }
        best
    }

    /// Index of the site nearest to `p`, by brute force.
    pub fn nearest_site(&self, p: Point) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, s) in self.sites.iter().enumerate() {
            let d = p.dist_sq(*s);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// Apply a classification computed by the features layer.
    pub fn set_classes(&mut self, classes: &[EdgeClass]) {
        assert_eq!(classes.len(), self.edges.len());
        for (e, c) in self.edges.iter_mut().zip(classes) {
            e.class = *c;
        }
    }
}
