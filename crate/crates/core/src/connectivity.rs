//! Connectivity analysis: lonely vertices, edge-flip repair, Delaunay
//! verification and exhaustive enumeration of small planar triangulations.
//!
//! A vertex is *lonely* when it has too few neighbors for any placement of
//! the vertices to make its star well-centered: an interior planar vertex
//! with fewer than 5 neighbors, a planar boundary vertex whose boundary angle
//! cannot be split into pieces smaller than π/2 by its interior edges, or a
//! vertex of a tetrahedral mesh with fewer than 7 incident edges.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{circumcenter, vertex_angles, Point};
use crate::mesh::{MeshError, SimplicialMesh};

/// Tolerance when testing a boundary angle against π/2.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Relative band around a circumsphere inside which a point counts as on it.
pub const INSPHERE_TOLERANCE: f64 = 1e-9;

/// Largest point set accepted by [`enumerate_triangulations`].
pub const MAX_ENUMERATION_POINTS: usize = 10;

#[derive(Debug, Error)]
pub enum ConnectivityError {
    #[error("{count} points exceed the enumeration limit of {max}")]
    TooManyPoints { count: usize, max: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("operation requires a planar mesh")]
    NotPlanar,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LonelyKind {
    Interior2dUnder5,
    Boundary2dAngle,
    Vertex3dUnder7,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonelyVertex {
    pub vertex: usize,
    pub kind: LonelyKind,
    /// Neighbor or edge count, or the boundary angle in radians.
    pub detail: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LonelyVertexReport {
    pub vertices: Vec<LonelyVertex>,
}

impl LonelyVertexReport {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn indices(&self) -> BTreeSet<usize> {
        self.vertices.iter().map(|l| l.vertex).collect()
    }
}

/// Sum of the angles at `v` over its incident triangles.
fn total_angle(mesh: &SimplicialMesh, v: usize) -> f64 {
    mesh.vertex_cells(v)
        .iter()
        .map(|&c| {
            let cell = mesh.cell(c);
            let pts = mesh.cell_points(c);
            let k = cell.iter().position(|&u| u == v).expect("incident cell");
            vertex_angles(&[pts[0], pts[1], pts[2]])[k]
        })
        .sum()
}

/// Number of incident triangles a boundary vertex needs so that its
/// boundary angle can be split into pieces strictly below π/2.
fn pieces_needed(boundary_angle: f64) -> usize {
    if boundary_angle < FRAC_PI_2 - ANGLE_TOLERANCE {
        return 1;
    }
    (boundary_angle / (FRAC_PI_2 - ANGLE_TOLERANCE)).ceil() as usize
}

/// Lonely status of a planar vertex from its neighbor count, incident
/// triangle count and boundary angle.
fn planar_lonely(
    v: usize,
    interior: bool,
    neighbors: usize,
    incident: usize,
    boundary_angle: f64,
) -> Option<LonelyVertex> {
    if interior {
        (neighbors < 5).then_some(LonelyVertex {
            vertex: v,
            kind: LonelyKind::Interior2dUnder5,
            detail: neighbors as f64,
        })
    } else {
        (incident < pieces_needed(boundary_angle)).then_some(LonelyVertex {
            vertex: v,
            kind: LonelyKind::Boundary2dAngle,
            detail: boundary_angle,
        })
    }
}

pub fn find_lonely_vertices(mesh: &SimplicialMesh) -> LonelyVertexReport {
    let mut vertices = Vec::new();
    for v in 0..mesh.vertex_count() {
        if mesh.vertex_cells(v).is_empty() {
            continue;
        }
        let neighbors = mesh.neighbors(v).len();
        let entry = if mesh.dim() == 2 {
            let interior = !mesh.is_boundary_vertex(v);
            let angle = if interior { 0.0 } else { total_angle(mesh, v) };
            planar_lonely(v, interior, neighbors, mesh.vertex_cells(v).len(), angle)
        } else {
            (neighbors < 7).then_some(LonelyVertex {
                vertex: v,
                kind: LonelyKind::Vertex3dUnder7,
                detail: neighbors as f64,
            })
        };
        vertices.extend(entry);
    }
    LonelyVertexReport { vertices }
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    let (ax, ay) = (a.coords()[0], a.coords()[1]);
    let (bx, by) = (b.coords()[0], b.coords()[1]);
    let (cx, cy) = (c.coords()[0], c.coords()[1]);
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

/// An interior edge `{a, b}` with opposite vertices `c` and `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Quad {
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    cells: [usize; 2],
}

fn interior_quads(mesh: &SimplicialMesh) -> Vec<Quad> {
    mesh.interior_facets()
        .map(|f| {
            let (a, b) = (f.vertices[0], f.vertices[1]);
            let opposite = |c: usize| {
                *mesh
                    .cell(c)
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .expect("triangle has a third vertex")
            };
            Quad {
                a,
                b,
                c: opposite(f.cells[0]),
                d: opposite(f.cells[1]),
                cells: [f.cells[0], f.cells[1]],
            }
        })
        .collect()
}

/// The quad is strictly convex, so replacing `ab` by `cd` yields two
/// positively oriented triangles.
fn flippable(points: &[Point], q: &Quad) -> bool {
    let (a, b, c, d) = (&points[q.a], &points[q.b], &points[q.c], &points[q.d]);
    let s1 = orient(c, d, a);
    let s2 = orient(c, d, b);
    let s3 = orient(a, b, c);
    let s4 = orient(a, b, d);
    s1 * s2 < 0.0 && s3 * s4 < 0.0
}

fn max_angle(points: &[Point], tri: [usize; 3]) -> f64 {
    vertex_angles(&[points[tri[0]], points[tri[1]], points[tri[2]]])
        .into_iter()
        .fold(0.0, f64::max)
}

/// Result of [`repair_connectivity_2d`].
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub mesh: SimplicialMesh,
    /// Flipped edges `(old, new)` in application order.
    pub flips: Vec<((usize, usize), (usize, usize))>,
    pub residual: LonelyVertexReport,
}

/// Greedy edge flips that strictly reduce the number of lonely vertices
/// without making any other vertex lonely or inverting a triangle.
///
/// Each round applies the flip with the largest reduction, breaking ties by
/// the smaller maximum angle of the two new triangles. Vertex positions and
/// boundary edges are never changed.
pub fn repair_connectivity_2d(mesh: &SimplicialMesh) -> Result<RepairOutcome, ConnectivityError> {
    if mesh.dim() != 2 {
        return Err(ConnectivityError::NotPlanar);
    }
    let mut current = mesh.clone();
    let mut flips = Vec::new();
    loop {
        let report = find_lonely_vertices(&current);
        if report.is_empty() {
            return Ok(RepairOutcome {
                mesh: current,
                flips,
                residual: report,
            });
        }
        let lonely = report.indices();
        let points = current.vertices();
        let edges: BTreeSet<(usize, usize)> = current.edges().into_iter().collect();
        let n = current.vertex_count();
        let neighbors: Vec<usize> = (0..n).map(|v| current.neighbors(v).len()).collect();
        let angles: Vec<f64> = (0..n)
            .map(|v| {
                if current.is_boundary_vertex(v) && !current.vertex_cells(v).is_empty() {
                    total_angle(&current, v)
                } else {
                    0.0
                }
            })
            .collect();

        let mut best: Option<(usize, f64, Quad)> = None;
        for q in interior_quads(&current) {
            if ![q.a, q.b, q.c, q.d].iter().any(|v| lonely.contains(v)) {
                continue;
            }
            let new_edge = (q.c.min(q.d), q.c.max(q.d));
            if edges.contains(&new_edge) || !flippable(points, &q) {
                continue;
            }
            // A flip removes neighbor a-b and adds c-d; the boundary angle
            // of every vertex is unchanged.
            let mut after = lonely.clone();
            let mut creates_new = false;
            for (v, delta) in [(q.a, -1i64), (q.b, -1), (q.c, 1), (q.d, 1)] {
                let nb = (neighbors[v] as i64 + delta) as usize;
                let incident = (current.vertex_cells(v).len() as i64 + delta) as usize;
                let status = planar_lonely(v, !current.is_boundary_vertex(v), nb, incident, angles[v]);
                match status {
                    Some(_) => {
                        if !lonely.contains(&v) {
                            creates_new = true;
                        }
                        after.insert(v);
                    }
                    None => {
                        after.remove(&v);
                    }
                }
            }
            if creates_new || after.len() >= lonely.len() {
                continue;
            }
            let reduction = lonely.len() - after.len();
            let worst = max_angle(points, [q.c, q.d, q.a]).max(max_angle(points, [q.d, q.c, q.b]));
            let better = match &best {
                None => true,
                Some((r, w, _)) => reduction > *r || (reduction == *r && worst < *w),
            };
            if better {
                best = Some((reduction, worst, q));
            }
        }

        let Some((_, _, q)) = best else {
            return Ok(RepairOutcome {
                mesh: current,
                flips,
                residual: report,
            });
        };
        let mut cells = current.connectivity().to_vec();
        cells[q.cells[0] * 3..q.cells[0] * 3 + 3].copy_from_slice(&[q.c, q.d, q.a]);
        cells[q.cells[1] * 3..q.cells[1] * 3 + 3].copy_from_slice(&[q.d, q.c, q.b]);
        current = current.with_connectivity(cells)?;
        flips.push(((q.a, q.b), (q.c.min(q.d), q.c.max(q.d))));
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DelaunayCheck {
    pub is_delaunay: bool,
    /// Sorted vertex lists of the interior facets that fail the test.
    pub violations: Vec<Vec<usize>>,
}

/// Checks the empty-circumball condition across every interior facet.
///
/// A point closer to the circumcenter than `R (1 - INSPHERE_TOLERANCE)` is a
/// strict violation; cocircular configurations pass. Degenerate cells have
/// no circumball and always count as violations.
pub fn is_locally_delaunay(mesh: &SimplicialMesh) -> DelaunayCheck {
    let mut violations = Vec::new();
    for facet in mesh.interior_facets() {
        let violated = facet.cells.iter().enumerate().any(|(i, &c)| {
            let other = facet.cells[1 - i];
            let opposite = mesh
                .cell(other)
                .iter()
                .copied()
                .find(|v| !facet.vertices.contains(v))
                .expect("cell has a vertex off the facet");
            match circumcenter(&mesh.cell_points(c)) {
                Ok(s) => {
                    mesh.vertex(opposite).distance(&s.center) < s.radius * (1.0 - INSPHERE_TOLERANCE)
                }
                Err(_) => true,
            }
        });
        if violated {
            violations.push(facet.vertices.clone());
        }
    }
    DelaunayCheck {
        is_delaunay: violations.is_empty(),
        violations,
    }
}

fn check_planar_points(points: &[Point]) -> Result<(), ConnectivityError> {
    if points.len() < 3 {
        return Err(ConnectivityError::DegenerateInput(format!(
            "{} points cannot be triangulated",
            points.len()
        )));
    }
    if points.iter().any(|p| p.dim() != 2 || !p.is_finite()) {
        return Err(ConnectivityError::DegenerateInput(
            "points must be finite and planar".into(),
        ));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dij = points[i].distance(&points[j]);
            if dij == 0.0 {
                return Err(ConnectivityError::DegenerateInput(format!(
                    "points {i} and {j} coincide"
                )));
            }
            for k in j + 1..points.len() {
                let scale = dij
                    .max(points[i].distance(&points[k]))
                    .max(points[j].distance(&points[k]));
                if orient(&points[i], &points[j], &points[k]).abs() < 1e-12 * scale * scale {
                    return Err(ConnectivityError::DegenerateInput(format!(
                        "points {i}, {j} and {k} are collinear"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Delaunay triangulation of a planar point set with no three collinear
/// points: incremental insertion in lexicographic order, then Lawson flips
/// until every interior edge passes the empty-circle test.
pub fn delaunay_triangulation(points: &[Point]) -> Result<SimplicialMesh, ConnectivityError> {
    check_planar_points(points)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i].coords(), points[j].coords());
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
    });

    let mut tris: Vec<[usize; 3]> = Vec::new();
    let (p0, p1, p2) = (order[0], order[1], order[2]);
    if orient(&points[p0], &points[p1], &points[p2]) > 0.0 {
        tris.push([p0, p1, p2]);
    } else {
        tris.push([p0, p2, p1]);
    }
    for &p in &order[3..] {
        // Counterclockwise hull edges are the directed edges used once.
        let directed: Vec<(usize, usize)> = tris
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .collect();
        let set: BTreeSet<(usize, usize)> = directed.iter().copied().collect();
        let visible: Vec<(usize, usize)> = directed
            .iter()
            .copied()
            .filter(|&(u, v)| !set.contains(&(v, u)))
            .filter(|&(u, v)| orient(&points[u], &points[v], &points[p]) < 0.0)
            .collect();
        for (u, v) in visible {
            tris.push([v, u, p]);
        }
    }

    let flat: Vec<usize> = tris.iter().flatten().copied().collect();
    let mut mesh = SimplicialMesh::new(2, points.to_vec(), flat)?;
    loop {
        let check = is_locally_delaunay(&mesh);
        if check.is_delaunay {
            return Ok(mesh);
        }
        let quads = interior_quads(&mesh);
        let q = quads
            .iter()
            .find(|q| {
                let key = vec![q.a, q.b];
                check.violations.contains(&key) && flippable(mesh.vertices(), q)
            })
            .copied()
            .ok_or_else(|| {
                ConnectivityError::DegenerateInput("no legal flip for a Delaunay violation".into())
            })?;
        let mut cells = mesh.connectivity().to_vec();
        cells[q.cells[0] * 3..q.cells[0] * 3 + 3].copy_from_slice(&[q.c, q.d, q.a]);
        cells[q.cells[1] * 3..q.cells[1] * 3 + 3].copy_from_slice(&[q.d, q.c, q.b]);
        mesh = mesh.with_connectivity(cells)?;
    }
}

/// One triangulation of a point set, stored canonically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triangulation {
    /// Sorted edges, each as an ascending pair. Identifies the triangulation.
    pub edges: Vec<(usize, usize)>,
    /// Triangles with ascending indices, sorted.
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    fn from_mesh(mesh: &SimplicialMesh) -> Self {
        let mut triangles: Vec<[usize; 3]> = mesh
            .cells()
            .map(|c| {
                let mut t = [c[0], c[1], c[2]];
                t.sort_unstable();
                t
            })
            .collect();
        triangles.sort_unstable();
        Self {
            edges: mesh.edges(),
            triangles,
        }
    }

    pub fn to_mesh(&self, points: &[Point]) -> Result<SimplicialMesh, MeshError> {
        SimplicialMesh::from_cells(2, points.to_vec(), &self.triangles)
    }

    /// All angles of all triangles.
    pub fn angles<'a>(&'a self, points: &'a [Point]) -> impl Iterator<Item = f64> + 'a {
        self.triangles
            .iter()
            .flat_map(move |t| vertex_angles(&[points[t[0]], points[t[1]], points[t[2]]]))
    }

    pub fn max_angle(&self, points: &[Point]) -> f64 {
        self.angles(points).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationSet {
    #[serde(skip)]
    pub points: Vec<Point>,
    /// In breadth-first order from the Delaunay triangulation.
    pub triangulations: Vec<Triangulation>,
}

impl TriangulationSet {
    /// JSON array of edge lists.
    pub fn edges_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.triangulations
                .iter()
                .map(|t| serde_json::json!(t.edges))
                .collect(),
        )
    }
}

/// Every triangulation of `points` that covers their convex hull, found by
/// breadth-first search of the edge-flip graph starting at the Delaunay
/// triangulation.
pub fn enumerate_triangulations(points: &[Point]) -> Result<TriangulationSet, ConnectivityError> {
    if points.len() > MAX_ENUMERATION_POINTS {
        return Err(ConnectivityError::TooManyPoints {
            count: points.len(),
            max: MAX_ENUMERATION_POINTS,
        });
    }
    let start = delaunay_triangulation(points)?;
    let mut seen: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let mut found = Vec::new();
    seen.insert(start.edges());
    queue.push_back(start);
    while let Some(mesh) = queue.pop_front() {
        for q in interior_quads(&mesh) {
            if !flippable(mesh.vertices(), &q) {
                continue;
            }
            let mut cells = mesh.connectivity().to_vec();
            cells[q.cells[0] * 3..q.cells[0] * 3 + 3].copy_from_slice(&[q.c, q.d, q.a]);
            cells[q.cells[1] * 3..q.cells[1] * 3 + 3].copy_from_slice(&[q.d, q.c, q.b]);
            let next = mesh.with_connectivity(cells)?;
            if seen.insert(next.edges()) {
                queue.push_back(next);
            }
        }
        found.push(Triangulation::from_mesh(&mesh));
    }
    Ok(TriangulationSet {
        points: points.to_vec(),
        triangulations: found,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// `max |2 cos θ - 1|`.
    Ecos,
    /// `max θ`.
    Emax,
}

impl Criterion {
    fn per_angle(self, theta: f64) -> f64 {
        match self {
            Criterion::Ecos => (2.0 * theta.cos() - 1.0).abs(),
            Criterion::Emax => theta,
        }
    }
}

/// Values within this distance of the minimum are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Indices of the triangulations minimizing `max_θ f(θ)`, ties kept.
pub fn argmin_max_angle_function<F: Fn(f64) -> f64>(set: &TriangulationSet, f: F) -> Vec<usize> {
    let values: Vec<f64> = set
        .triangulations
        .iter()
        .map(|t| t.angles(&set.points).map(&f).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v <= best + TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect()
}

/// All triangulations of `points` that minimize `criterion`.
pub fn optimal_triangulation(
    points: &[Point],
    criterion: Criterion,
) -> Result<(TriangulationSet, Vec<usize>), ConnectivityError> {
    let set = enumerate_triangulations(points)?;
    let best = argmin_max_angle_function(&set, |t| criterion.per_angle(t));
    Ok((set, best))
}
