//! Measurement and optimization of well-centered simplicial meshes.
//!
//! A simplex is well-centered when its circumcenter lies strictly inside
//! it. This crate measures well-centeredness of triangle and tetrahedral
//! meshes through the signed-height ratio `h/R`, relocates interior vertices
//! to minimize `E_p = Σ |2h/R - 1|^p` with fixed boundary and connectivity,
//! and checks the results with independent geometric tests.

pub mod cli;
pub mod connectivity;
pub mod geometry;
pub mod mesh;
pub mod optimize;
pub mod quality;
pub mod render;
pub mod verify;

pub use geometry::{Point, SimplexGeometry};
pub use mesh::{MeshError, MeshFormat, SimplicialMesh};
pub use quality::{EnergyConfig, EnergyFamily, QualityReport};
