//! Mesh generators and checks shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcmesh::connectivity::is_locally_delaunay;
use wcmesh::geometry::{is_k_well_centered, Point};
use wcmesh::optimize::OptimizationTrace;
use wcmesh::SimplicialMesh;

/// Square `[0, n]^2` with boundary vertices at the integer points of its
/// sides and one interior vertex at the center of every unit cell.
///
/// Each boundary edge forms a triangle with the center of its cell, corner
/// cells close the ring, and the `n x n` lattice of centers is split along
/// the `/` diagonal. Every straight-side vertex therefore lies in three
/// triangles and every corner in two.
pub fn centered_grid(n: usize) -> SimplicialMesh {
    let mut pts = Vec::new();
    let mut boundary = std::collections::HashMap::new();
    for j in 0..=n {
        for i in 0..=n {
            if i == 0 || j == 0 || i == n || j == n {
                boundary.insert((i, j), pts.len());
                pts.push(Point::xy(i as f64, j as f64));
            }
        }
    }
    let first_center = pts.len();
    for j in 0..n {
        for i in 0..n {
            pts.push(Point::xy(i as f64 + 0.5, j as f64 + 0.5));
        }
    }
    let c = |i: usize, j: usize| first_center + j * n + i;
    let b = |i: usize, j: usize| boundary[&(i, j)];

    let mut cells: Vec<[usize; 3]> = Vec::new();
    for i in 0..n {
        cells.push([b(i, 0), b(i + 1, 0), c(i, 0)]);
        cells.push([b(i + 1, n), b(i, n), c(i, n - 1)]);
        cells.push([b(0, i + 1), b(0, i), c(0, i)]);
        cells.push([b(n, i), b(n, i + 1), c(n - 1, i)]);
    }
    for i in 0..n - 1 {
        cells.push([c(i + 1, 0), c(i, 0), b(i + 1, 0)]);
        cells.push([c(i, n - 1), c(i + 1, n - 1), b(i + 1, n)]);
        cells.push([c(0, i), c(0, i + 1), b(0, i + 1)]);
        cells.push([c(n - 1, i + 1), c(n - 1, i), b(n, i + 1)]);
    }
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            cells.push([c(i, j), c(i + 1, j), c(i + 1, j + 1)]);
            cells.push([c(i, j), c(i + 1, j + 1), c(i, j + 1)]);
        }
    }
    SimplicialMesh::from_cells(2, pts, &cells).expect("valid grid")
}

/// Cube `[0, n]^3` cut into unit cubes of six tetrahedra each, all sharing
/// the cube's main diagonal.
pub fn kuhn_cube(n: usize) -> SimplicialMesh {
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut pts = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                pts.push(Point::xyz(i as f64, j as f64, k as f64));
            }
        }
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in perms {
                    let mut v = [i, j, k];
                    let mut tet = [idx(i, j, k); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        v[axis] += 1;
                        tet[step + 1] = idx(v[0], v[1], v[2]);
                    }
                    cells.push(tet);
                }
            }
        }
    }
    SimplicialMesh::from_cells(3, pts, &cells).expect("valid cube")
}

/// Moves every interior vertex by independent uniform noise in
/// `[-amplitude, amplitude]` per coordinate.
pub fn perturb(mesh: &SimplicialMesh, amplitude: f64, seed: u64) -> SimplicialMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mesh.clone();
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let mut p = mesh.vertex(v);
        for x in p.coords_mut() {
            *x += rng.gen_range(-amplitude..=amplitude);
        }
        out.set_vertex(v, p);
    }
    out
}

/// Jacobi Laplacian smoothing of interior vertices.
pub fn laplacian_smooth(mesh: &SimplicialMesh, iterations: usize) -> SimplicialMesh {
    let mut current = mesh.clone();
    for _ in 0..iterations {
        let mut next = current.clone();
        for v in current.interior_vertices() {
            let nb = current.neighbors(v);
            let mut sum = Point::origin(current.dim());
            for &u in &nb {
                sum = sum.add(&current.vertex(u));
            }
            next.set_vertex(v, sum.scale(1.0 / nb.len() as f64));
        }
        current = next;
    }
    current
}

pub fn nonacute_count(mesh: &SimplicialMesh) -> usize {
    (0..mesh.cell_count())
        .filter(|&c| !is_k_well_centered(&mesh.cell_points(c), mesh.dim()).unwrap_or(false))
        .count()
}

/// Violations of the optimizer contract: accepted energies must strictly
/// decrease within each stage, and boundary coordinates and connectivity
/// must be bit-identical.
pub fn contract_violations(
    before: &SimplicialMesh,
    after: &SimplicialMesh,
    trace: &OptimizationTrace,
) -> Vec<String> {
    let mut out = Vec::new();
    if !trace.is_strictly_decreasing() {
        out.push("accepted energy did not strictly decrease".to_string());
    }
    if before.connectivity() != after.connectivity() {
        out.push("connectivity changed".to_string());
    }
    for v in 0..before.vertex_count() {
        if before.is_boundary_vertex(v) {
            let (a, b) = (before.vertex(v), after.vertex(v));
            if !a.coords().iter().zip(b.coords()).all(|(x, y)| x.to_bits() == y.to_bits()) {
                out.push(format!("boundary vertex {v} moved"));
            }
        }
    }
    out
}

/// `Some(is_delaunay)` for a planar mesh whose every triangle is
/// 2-well-centered, `None` otherwise.
pub fn well_centered_delaunay(mesh: &SimplicialMesh) -> Option<bool> {
    (mesh.dim() == 2 && nonacute_count(mesh) == 0).then(|| is_locally_delaunay(mesh).is_delaunay)
}

/// Asserts the optimizer contract and, on convex domains, that a
/// 2-well-centered planar result is Delaunay.
pub fn assert_optimizer_contract(
    before: &SimplicialMesh,
    after: &SimplicialMesh,
    trace: &OptimizationTrace,
    convex: bool,
) {
    let v = contract_violations(before, after, trace);
    assert!(v.is_empty(), "{v:?}");
    if convex {
        assert_ne!(well_centered_delaunay(after), Some(false), "well-centered output is not Delaunay");
    }
}
