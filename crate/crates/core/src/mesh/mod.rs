//! Indexed simplicial complexes with fixed boundary detection.
//!
//! A [`SimplicialMesh`] is a vertex array plus a connectivity table of
//! `n`-simplices (`n` is 2 or 3, equal to the embedding dimension). Boundary
//! status is always derived from facet incidence: a facet with exactly one
//! incident cell lies on the boundary, and so do its vertices.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::{signed_volume, Point};

pub use io::{load_mesh, read_node_ele, read_off, save_mesh, write_node_ele, write_off, MeshFormat};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An `(n-1)`-face and the cells that share it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// One entry for a boundary facet, two for an interior one.
    pub cells: Vec<usize>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

/// Neighborhood of a single vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexStar {
    pub vertex: usize,
    /// Incident cells, ascending.
    pub cells: Vec<usize>,
    /// Vertices sharing an edge with `vertex`, ascending.
    pub neighbors: Vec<usize>,
    pub is_interior: bool,
}

#[derive(Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Point>,
    /// Flat connectivity, `dim + 1` indices per cell.
    cells: Vec<usize>,
    boundary: Vec<bool>,
    facets: Vec<Facet>,
    vertex_cells: Vec<Vec<usize>>,
}

impl fmt::Debug for SimplicialMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimplicialMesh")
            .field("dim", &self.dim)
            .field("vertices", &self.vertices.len())
            .field("cells", &self.cell_count())
            .finish()
    }
}

impl SimplicialMesh {
    /// Builds a mesh from coordinates and a flat connectivity table.
    ///
    /// Cells with negative signed volume are reoriented by swapping their
    /// first two indices.
    pub fn new(dim: usize, vertices: Vec<Point>, cells: Vec<usize>) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Unsupported(format!("mesh dimension {dim}")));
        }
        let stride = dim + 1;
        if cells.len() % stride != 0 {
            return Err(MeshError::Index(format!(
                "connectivity length {} is not a multiple of {stride}",
                cells.len()
            )));
        }
        for (i, p) in vertices.iter().enumerate() {
            if p.dim() != dim {
                return Err(MeshError::Index(format!(
                    "vertex {i} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            if !p.is_finite() {
                return Err(MeshError::Index(format!("vertex {i} has non-finite coordinates")));
            }
        }
        let mut mesh = Self {
            dim,
            vertices,
            cells,
            boundary: Vec::new(),
            facets: Vec::new(),
            vertex_cells: Vec::new(),
        };
        mesh.check_indices()?;
        mesh.orient_cells();
        mesh.rebuild_topology()?;
        Ok(mesh)
    }

    /// Convenience constructor from per-cell index arrays.
    pub fn from_cells<C: AsRef<[usize]>>(
        dim: usize,
        vertices: Vec<Point>,
        cells: &[C],
    ) -> Result<Self, MeshError> {
        let mut flat = Vec::with_capacity(cells.len() * (dim + 1));
        for (i, c) in cells.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != dim + 1 {
                return Err(MeshError::Index(format!(
                    "cell {i} has {} vertices, expected {}",
                    c.len(),
                    dim + 1
                )));
            }
            flat.extend_from_slice(c);
        }
        Self::new(dim, vertices, flat)
    }

    fn check_indices(&self) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        for (c, cell) in self.cells.chunks(self.dim + 1).enumerate() {
            for (i, &v) in cell.iter().enumerate() {
                if v >= nv {
                    return Err(MeshError::Index(format!(
                        "cell {c} references vertex {v} but the mesh has {nv} vertices"
                    )));
                }
                if cell[..i].contains(&v) {
                    return Err(MeshError::Index(format!("cell {c} repeats vertex {v}")));
                }
            }
        }
        Ok(())
    }

    fn orient_cells(&mut self) {
        let stride = self.dim + 1;
        for c in 0..self.cell_count() {
            let pts = self.cell_points(c);
            if signed_volume(&pts) < 0.0 {
                self.cells.swap(c * stride, c * stride + 1);
            }
        }
    }

    fn rebuild_topology(&mut self) -> Result<(), MeshError> {
        let mut incidence: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for c in 0..self.cell_count() {
            let cell = self.cell(c);
            for skip in 0..cell.len() {
                let mut key: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                incidence.entry(key).or_default().push(c);
            }
        }
        let mut boundary = vec![false; self.vertices.len()];
        let mut facets = Vec::with_capacity(incidence.len());
        for (vertices, cells) in incidence {
            if cells.len() > 2 {
                return Err(MeshError::Topology(format!(
                    "facet {vertices:?} is shared by {} cells",
                    cells.len()
                )));
            }
            if cells.len() == 1 {
                for &v in &vertices {
                    boundary[v] = true;
                }
            }
            facets.push(Facet { vertices, cells });
        }
        let mut vertex_cells = vec![Vec::new(); self.vertices.len()];
        for c in 0..self.cell_count() {
            for &v in self.cell(c) {
                vertex_cells[v].push(c);
            }
        }
        self.boundary = boundary;
        self.facets = facets;
        self.vertex_cells = vertex_cells;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Moves a vertex. Connectivity and boundary flags are unaffected.
    pub fn set_vertex(&mut self, v: usize, p: Point) {
        debug_assert_eq!(p.dim(), self.dim);
        self.vertices[v] = p;
    }

    /// Flat connectivity table.
    pub fn connectivity(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[c * s..(c + 1) * s]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cells.chunks(self.dim + 1)
    }

    /// Coordinates of the vertices of cell `c`, in connectivity order.
    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.boundary[v]).collect()
    }

    /// All facets in ascending order of their sorted vertex lists.
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = &Facet> + '_ {
        self.facets.iter().filter(|f| f.is_boundary())
    }

    pub fn interior_facets(&self) -> impl Iterator<Item = &Facet> + '_ {
        self.facets.iter().filter(|f| !f.is_boundary())
    }

    /// Cells incident to `v`, ascending.
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn vertex_star(&self, v: usize) -> Result<VertexStar, MeshError> {
        if v >= self.vertices.len() {
            return Err(MeshError::Index(format!(
                "vertex {v} out of range for {} vertices",
                self.vertices.len()
            )));
        }
        Ok(VertexStar {
            vertex: v,
            cells: self.vertex_cells[v].clone(),
            neighbors: self.neighbors(v),
            is_interior: !self.boundary[v],
        })
    }

    /// Vertices sharing an edge with `v`, ascending.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_cells[v]
            .iter()
            .flat_map(|&c| self.cell(c).iter().copied())
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All edges as ascending index pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for cell in self.cells() {
            for i in 0..cell.len() {
                for j in i + 1..cell.len() {
                    let (a, b) = (cell[i].min(cell[j]), cell[i].max(cell[j]));
                    edges.push((a, b));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Mean length of the edges incident to `v`.
    pub fn mean_incident_edge_length(&self, v: usize) -> f64 {
        let nbrs = self.neighbors(v);
        if nbrs.is_empty() {
            return 0.0;
        }
        let p = self.vertices[v];
        nbrs.iter().map(|&u| p.distance(&self.vertices[u])).sum::<f64>() / nbrs.len() as f64
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        edges
            .iter()
            .map(|&(a, b)| self.vertices[a].distance(&self.vertices[b]))
            .sum::<f64>()
            / edges.len() as f64
    }

    /// Signed area or volume of cell `c` relative to its stored orientation.
    pub fn signed_cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c))
    }

    /// Indices of cells whose signed volume is not positive.
    pub fn inverted_cells(&self) -> Vec<usize> {
        (0..self.cell_count())
            .filter(|&c| self.signed_cell_volume(c) <= 0.0)
            .collect()
    }

    /// Replaces the connectivity table, keeping the vertex coordinates.
    ///
    /// The new cells are validated and oriented like in [`SimplicialMesh::new`].
    pub fn with_connectivity(&self, cells: Vec<usize>) -> Result<Self, MeshError> {
        Self::new(self.dim, self.vertices.clone(), cells)
    }
}
