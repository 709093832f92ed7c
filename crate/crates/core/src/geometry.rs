//! Bounded Voronoi partition of a rectangular workspace and relay candidate
//! points on shared cell boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Geometric tolerance in meters.
pub const GEOM_TOL: f64 = 1e-9;
/// Minimum allowed separation between two Voronoi sites.
pub const MIN_SITE_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    /// Lexicographic (x, then y) ordering used for deterministic tie-breaks.
    pub fn lex_le(self, other: Point) -> bool {
        (self.x, self.y) <= (other.x, other.y)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Workspace {
    pub min_corner: Point,
    pub max_corner: Point,
}

impl Workspace {
    pub fn new(min_corner: Point, max_corner: Point) -> Result<Self, GeometryError> {
        if min_corner.x >= max_corner.x || min_corner.y >= max_corner.y {
            return Err(GeometryError::DegenerateWorkspace);
        }
        Ok(Workspace { min_corner, max_corner })
    }

    pub fn rect(width: f64, height: f64) -> Self {
        Workspace {
            min_corner: Point::new(0.0, 0.0),
            max_corner: Point::new(width, height),
        }
    }

    pub fn width(&self) -> f64 {
        self.max_corner.x - self.min_corner.x
    }

    pub fn height(&self) -> f64 {
        self.max_corner.y - self.min_corner.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_corner.x - GEOM_TOL
            && p.x <= self.max_corner.x + GEOM_TOL
            && p.y >= self.min_corner.y - GEOM_TOL
            && p.y <= self.max_corner.y + GEOM_TOL
    }

    /// Counterclockwise corner polygon.
    fn corners(&self) -> Vec<Point> {
        vec![
            self.min_corner,
            Point::new(self.max_corner.x, self.min_corner.y),
            self.max_corner,
            Point::new(self.min_corner.x, self.max_corner.y),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub owner: usize,
    pub site: Point,
    /// Convex, counterclockwise.
    pub polygon: Vec<Point>,
    /// Sorted by neighbor id; segment endpoints in lexicographic order.
    pub neighbor_edges: Vec<(usize, [Point; 2])>,
}

impl VoronoiCell {
    pub fn contains(&self, p: Point) -> bool {
        // Convex CCW polygon: p must be on the left of (or on) every edge.
        let n = self.polygon.len();
        for k in 0..n {
            let a = self.polygon[k];
            let b = self.polygon[(k + 1) % n];
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross < -GEOM_TOL * (1.0 + a.dist(b)) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelayCandidate {
    pub position: Point,
    /// Owner ids of the two adjacent cells, smaller first.
    pub pair: (usize, usize),
    /// max(‖q − p_i‖, ‖q − p_j‖), minimal over the shared segment.
    pub max_leg: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("workspace min corner must be strictly below max corner")]
    DegenerateWorkspace,
    #[error("at least one site required")]
    EmptySites,
    #[error("sites {0} and {1} are closer than the minimum separation")]
    DuplicateSites(usize, usize),
    #[error("site {0} lies outside the workspace")]
    SiteOutsideWorkspace(usize),
    #[error("cells {0} and {1} share no boundary segment")]
    NoSharedEdge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeLabel {
    Boundary,
    Neighbor(usize),
}

/// Clip a labeled convex polygon by the half-plane { p : n·p <= off }.
/// Newly created edges along the clip line get `label`.
fn clip_half_plane(
    poly: &[(Point, EdgeLabel)],
    normal: Point,
    off: f64,
    label: EdgeLabel,
) -> Vec<(Point, EdgeLabel)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for k in 0..n {
        let (cur, cur_label) = poly[k];
        let (next, _) = poly[(k + 1) % n];
        let h_cur = normal.dot(cur) - off;
        let h_next = normal.dot(next) - off;
        let cur_in = h_cur <= 0.0;
        let next_in = h_next <= 0.0;
        if cur_in {
            out.push((cur, cur_label));
            if !next_in {
                let t = h_cur / (h_cur - h_next);
                out.push((cur.lerp(next, t), label));
            }
        } else if next_in {
            let t = h_cur / (h_cur - h_next);
            out.push((cur.lerp(next, t), cur_label));
        }
    }
    out
}

/// Voronoi partition of the workspace induced by `sites`, computed per cell
/// as the intersection of bisector half-planes with the workspace rectangle.
pub fn compute_voronoi(
    sites: &[Point],
    workspace: &Workspace,
) -> Result<Vec<VoronoiCell>, GeometryError> {
    if sites.is_empty() {
        return Err(GeometryError::EmptySites);
    }
    for (i, s) in sites.iter().enumerate() {
        if !workspace.contains(*s) {
            return Err(GeometryError::SiteOutsideWorkspace(i));
        }
    }
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            if sites[i].dist(sites[j]) < MIN_SITE_SEPARATION {
                return Err(GeometryError::DuplicateSites(i, j));
            }
        }
    }

    let mut cells = Vec::with_capacity(sites.len());
    for (i, &pi) in sites.iter().enumerate() {
        let mut poly: Vec<(Point, EdgeLabel)> = workspace
            .corners()
            .into_iter()
            .map(|p| (p, EdgeLabel::Boundary))
            .collect();
        for (j, &pj) in sites.iter().enumerate() {
            if j == i {
                continue;
            }
            // Keep the side closer to p_i: (p - mid)·(p_j - p_i) <= 0.
            let normal = pj.sub(pi);
            let off = 0.5 * (pj.dot(pj) - pi.dot(pi));
            poly = clip_half_plane(&poly, normal, off, EdgeLabel::Neighbor(j));
            if poly.is_empty() {
                break;
            }
        }

        // Collect the shared segment per neighbor: all j-labeled edge
        // endpoints are collinear on the bisector, so the extremes are the
        // segment endpoints.
        let mut neighbor_edges: Vec<(usize, [Point; 2])> = Vec::new();
        let n = poly.len();
        for (j, _) in sites.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut endpoints: Vec<Point> = Vec::new();
            for k in 0..n {
                let (a, lbl) = poly[k];
                let (b, _) = poly[(k + 1) % n];
                if lbl == EdgeLabel::Neighbor(j) {
                    endpoints.push(a);
                    endpoints.push(b);
                }
            }
            if endpoints.is_empty() {
                continue;
            }
            let mut lo = endpoints[0];
            let mut hi = endpoints[0];
            for &p in &endpoints[1..] {
                if p.lex_le(lo) {
                    lo = p;
                }
                if hi.lex_le(p) {
                    hi = p;
                }
            }
            if lo.dist(hi) > GEOM_TOL {
                neighbor_edges.push((j, [lo, hi]));
            }
        }
        neighbor_edges.sort_by_key(|(j, _)| *j);

        cells.push(VoronoiCell {
            owner: i,
            site: pi,
            polygon: poly.into_iter().map(|(p, _)| p).collect(),
            neighbor_edges,
        });
    }
    Ok(cells)
}

/// Relay point on the shared boundary of two cells: the argmin over the
/// segment of max(‖q − p_i‖, ‖q − p_j‖). On a Voronoi edge this is the foot
/// of the perpendicular bisector, clamped to the nearest segment endpoint.
pub fn relay_point(
    cell_i: &VoronoiCell,
    cell_j: &VoronoiCell,
) -> Result<RelayCandidate, GeometryError> {
    // Canonicalize so that relay_point(i, j) == relay_point(j, i) bit-exactly.
    let (a, b) = if cell_i.owner <= cell_j.owner {
        (cell_i, cell_j)
    } else {
        (cell_j, cell_i)
    };
    let seg = a
        .neighbor_edges
        .iter()
        .find(|(j, _)| *j == b.owner)
        .map(|(_, seg)| *seg)
        .ok_or(GeometryError::NoSharedEdge(a.owner, b.owner))?;
    let (s0, s1) = if seg[0].lex_le(seg[1]) {
        (seg[0], seg[1])
    } else {
        (seg[1], seg[0])
    };

    let (pa, pb) = (a.site, b.site);
    let dir = s1.sub(s0);
    let len2 = dir.dot(dir);

    // f(t) = max(d²(q(t), pa), d²(q(t), pb)) is the max of two quadratics
    // with equal leading coefficient; the minimum lies at a segment endpoint,
    // at a branch's unconstrained minimizer, or where the branches cross
    // (their difference is linear in t).
    let mut candidates = vec![0.0, 1.0];
    if len2 > GEOM_TOL * GEOM_TOL {
        for p in [pa, pb] {
            let t = p.sub(s0).dot(dir) / len2;
            candidates.push(t.clamp(0.0, 1.0));
        }
        // d²(q,pa) - d²(q,pb) = 0  =>  linear in t.
        let c0 = s0.dist2(pa) - s0.dist2(pb);
        let slope = 2.0 * dir.dot(pb.sub(pa));
        if slope.abs() > 0.0 {
            let t = c0 / slope;
            if (0.0..=1.0).contains(&t) {
                candidates.push(t);
            }
        }
    }
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    for &t in &candidates {
        let q = s0.lerp(s1, t);
        let f = q.dist2(pa).max(q.dist2(pb));
        if f < best {
            best = f;
            best_t = t;
        }
    }
    let position = s0.lerp(s1, best_t);
    Ok(RelayCandidate {
        position,
        pair: (a.owner, b.owner),
        max_leg: best.sqrt(),
    })
}

/// One relay candidate per unordered adjacent cell pair, sorted by (i, j).
pub fn relay_candidates(cells: &[VoronoiCell]) -> Vec<RelayCandidate> {
    let mut out = Vec::new();
    for cell in cells {
        for &(j, _) in &cell.neighbor_edges {
            if j > cell.owner {
                if let Ok(c) = relay_point(cell, &cells[j]) {
                    out.push(c);
                }
            }
        }
    }
    out.sort_by_key(|c| c.pair);
    out
}
