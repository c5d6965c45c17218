//! Scalar quality measures, mesh energies and distribution reports.
//!
//! All energies are driven by the height ratio `h(v, σ) / R(σ)` of each
//! (cell, vertex) pair. Degenerate cells use `h / R = -1` everywhere, as if
//! the circumcenter were at infinity, which keeps the energies upper
//! semicontinuous.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_k_well_centered, vertex_angles, Point, SimplexGeometry};
use crate::mesh::SimplicialMesh;

/// Height ratio assigned to every vertex of a degenerate cell.
pub const DEGENERATE_HEIGHT_RATIO: f64 = -1.0;

/// Per-cell value of the inverse mean ratio for inverted or flat cells.
pub const BARRIER_SENTINEL: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("{0} is only defined for planar meshes")]
    NotPlanar(&'static str),
    #[error("invalid energy configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyFamily {
    /// `Σ |2h/R - 1|^p`.
    Ep,
    /// `max |h/R - 1/2|`.
    Einfty,
    /// `barrier_weight * E_p + E_imr`.
    EpWithBarrier,
    /// `max |2 cos θ - 1|` over planar angles.
    Ecos,
    /// Largest planar angle.
    Emax,
    /// Smallest planar angle.
    Emin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub family: EnergyFamily,
    pub p: u32,
    pub k_n: f64,
    pub barrier_weight: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            family: EnergyFamily::Ep,
            p: 4,
            k_n: 0.5,
            barrier_weight: 100.0,
        }
    }
}

impl EnergyConfig {
    pub fn ep(p: u32) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn with_barrier(p: u32) -> Self {
        Self {
            family: EnergyFamily::EpWithBarrier,
            p,
            ..Self::default()
        }
    }

    pub fn family(family: EnergyFamily) -> Self {
        Self {
            family,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        if self.p < 1 {
            return Err(QualityError::InvalidConfig("p must be at least 1".into()));
        }
        if !(self.k_n > 0.0 && self.k_n <= 1.0) {
            return Err(QualityError::InvalidConfig(format!(
                "k_n = {} is outside (0, 1]",
                self.k_n
            )));
        }
        if !(self.barrier_weight > 0.0 && self.barrier_weight.is_finite()) {
            return Err(QualityError::InvalidConfig("barrier weight must be positive".into()));
        }
        Ok(())
    }

    /// How per-cell values combine into the mesh energy.
    pub fn reduction(&self) -> Reduction {
        match self.family {
            EnergyFamily::Ep | EnergyFamily::EpWithBarrier => Reduction::Sum,
            EnergyFamily::Einfty | EnergyFamily::Ecos | EnergyFamily::Emax => Reduction::Max,
            EnergyFamily::Emin => Reduction::Min,
        }
    }

    fn is_planar_only(&self) -> bool {
        matches!(
            self.family,
            EnergyFamily::Ecos | EnergyFamily::Emax | EnergyFamily::Emin
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Max,
    Min,
}

/// `h(v_i) / R` for every vertex of a simplex, -1 throughout if degenerate.
pub fn height_ratios(vertices: &[Point]) -> Vec<f64> {
    match SimplexGeometry::new(vertices) {
        Ok(g) => g.ratios().collect(),
        Err(_) => vec![DEGENERATE_HEIGHT_RATIO; vertices.len()],
    }
}

/// `max_i |h(v_i)/R - k_n|`.
pub fn f_n(vertices: &[Point], k_n: f64) -> f64 {
    height_ratios(vertices)
        .into_iter()
        .map(|r| (r - k_n).abs())
        .fold(0.0, f64::max)
}

fn ep_term(ratio: f64, p: u32) -> f64 {
    (2.0 * ratio - 1.0).abs().powi(p as i32)
}

/// `Σ_i |2h(v_i)/R - 1|^p` over the vertices of one simplex.
pub fn cell_ep(vertices: &[Point], p: u32) -> f64 {
    height_ratios(vertices).into_iter().map(|r| ep_term(r, p)).sum()
}

fn triangle(vertices: &[Point]) -> [Point; 3] {
    [vertices[0], vertices[1], vertices[2]]
}

/// The value one cell contributes before the mesh-level reduction.
pub fn cell_energy(config: &EnergyConfig, vertices: &[Point]) -> f64 {
    match config.family {
        EnergyFamily::Ep => cell_ep(vertices, config.p),
        EnergyFamily::EpWithBarrier => {
            config.barrier_weight * cell_ep(vertices, config.p) + inverse_mean_ratio(vertices)
        }
        EnergyFamily::Einfty => height_ratios(vertices)
            .into_iter()
            .map(|r| (r - 0.5).abs())
            .fold(0.0, f64::max),
        EnergyFamily::Ecos => vertex_angles(&triangle(vertices))
            .into_iter()
            .map(|t| (2.0 * t.cos() - 1.0).abs())
            .fold(0.0, f64::max),
        EnergyFamily::Emax => vertex_angles(&triangle(vertices))
            .into_iter()
            .fold(0.0, f64::max),
        EnergyFamily::Emin => vertex_angles(&triangle(vertices))
            .into_iter()
            .fold(PI, f64::min),
    }
}

/// Mesh energy under `config`, summed or reduced in cell order.
pub fn evaluate(mesh: &SimplicialMesh, config: &EnergyConfig) -> Result<f64, QualityError> {
    config.validate()?;
    if config.is_planar_only() && mesh.dim() != 2 {
        return Err(QualityError::NotPlanar("angle-based energies"));
    }
    Ok(reduce_cells(mesh, config))
}

pub(crate) fn reduce_cells(mesh: &SimplicialMesh, config: &EnergyConfig) -> f64 {
    let values = (0..mesh.cell_count()).map(|c| cell_energy(config, &mesh.cell_points(c)));
    match config.reduction() {
        Reduction::Sum => values.sum(),
        Reduction::Max => values.fold(0.0, f64::max),
        Reduction::Min => values.fold(PI, f64::min),
    }
}

/// `E_p = Σ_cells Σ_vertices |2h/R - 1|^p`.
pub fn energy_ep(mesh: &SimplicialMesh, p: u32) -> f64 {
    reduce_cells(mesh, &EnergyConfig::ep(p))
}

/// `E_∞ = max |h/R - 1/2|` over all (cell, vertex) pairs.
pub fn energy_einfty(mesh: &SimplicialMesh) -> f64 {
    reduce_cells(mesh, &EnergyConfig::family(EnergyFamily::Einfty))
}

pub fn energy_cos(mesh: &SimplicialMesh) -> Result<f64, QualityError> {
    evaluate(mesh, &EnergyConfig::family(EnergyFamily::Ecos))
}

pub fn energy_max(mesh: &SimplicialMesh) -> Result<f64, QualityError> {
    evaluate(mesh, &EnergyConfig::family(EnergyFamily::Emax))
}

pub fn energy_min(mesh: &SimplicialMesh) -> Result<f64, QualityError> {
    evaluate(mesh, &EnergyConfig::family(EnergyFamily::Emin))
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Inverse of the edge matrix of the unit-edge regular triangle.
const W2_INV: [[f64; 2]; 2] = [[1.0, -1.0 / SQRT3], [0.0, 2.0 / SQRT3]];

/// Inverse of the edge matrix of the unit-edge regular tetrahedron with
/// vertices `0`, `e_x`, `(1/2, √3/2, 0)`, `(1/2, √3/6, √(2/3))`.
fn w3_inv() -> [[f64; 3]; 3] {
    let s6 = 6f64.sqrt();
    [
        [1.0, -1.0 / SQRT3, -1.0 / s6],
        [0.0, 2.0 / SQRT3, -1.0 / s6],
        [0.0, 0.0, 1.5f64.sqrt()],
    ]
}

/// Ideal-weight inverse mean ratio `‖T‖²_F / (n det(T)^{2/n})` with
/// `T = J W⁻¹`, where `J` holds the cell's edge vectors from vertex 0 and
/// `W` those of the unit regular simplex. Equals 1 exactly for regular
/// cells and returns [`BARRIER_SENTINEL`] once `det(T) <= 0`.
pub fn inverse_mean_ratio(vertices: &[Point]) -> f64 {
    let n = vertices.len() - 1;
    let mut t = [[0.0; 3]; 3];
    let (frob, det) = match n {
        2 => {
            let e1 = vertices[1].sub(&vertices[0]);
            let e2 = vertices[2].sub(&vertices[0]);
            let j = [[e1.coords()[0], e2.coords()[0]], [e1.coords()[1], e2.coords()[1]]];
            for r in 0..2 {
                for c in 0..2 {
                    t[r][c] = (0..2).map(|k| j[r][k] * W2_INV[k][c]).sum();
                }
            }
            let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
            let frob: f64 = t[..2].iter().flat_map(|row| row[..2].iter()).map(|x| x * x).sum();
            (frob, det)
        }
        3 => {
            let w = w3_inv();
            let e: Vec<Point> = (1..4).map(|i| vertices[i].sub(&vertices[0])).collect();
            for r in 0..3 {
                for c in 0..3 {
                    t[r][c] = (0..3).map(|k| e[k].coords()[r] * w[k][c]).sum();
                }
            }
            let det = t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1])
                - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
                + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0]);
            let frob: f64 = t.iter().flat_map(|row| row.iter()).map(|x| x * x).sum();
            (frob, det)
        }
        _ => panic!("inverse mean ratio needs a triangle in 2D or a tetrahedron in 3D"),
    };
    if !(det > 0.0) {
        return BARRIER_SENTINEL;
    }
    let eta = frob / (n as f64 * det.powf(2.0 / n as f64));
    if eta.is_finite() {
        eta
    } else {
        BARRIER_SENTINEL
    }
}

/// `Σ_cells η(σ)`.
pub fn energy_imr(mesh: &SimplicialMesh) -> f64 {
    (0..mesh.cell_count())
        .map(|c| inverse_mean_ratio(&mesh.cell_points(c)))
        .sum()
}

/// `barrier_weight * E_p + E_imr`, summed per cell in cell order.
pub fn energy_combined(mesh: &SimplicialMesh, config: &EnergyConfig) -> f64 {
    let cfg = EnergyConfig {
        family: EnergyFamily::EpWithBarrier,
        ..*config
    };
    reduce_cells(mesh, &cfg)
}

/// True iff the cell is `n`-well-centered; degenerate cells are not.
pub fn cell_is_well_centered(vertices: &[Point]) -> bool {
    is_k_well_centered(vertices, vertices.len() - 1).unwrap_or(false)
}

/// Cells that are not `n`-well-centered (nonacute in 2D).
pub fn bad_cells(mesh: &SimplicialMesh) -> Vec<usize> {
    (0..mesh.cell_count())
        .filter(|&c| !cell_is_well_centered(&mesh.cell_points(c)))
        .collect()
}

/// Smallest `h/R` over all (cell, vertex) pairs.
pub fn min_height_ratio(mesh: &SimplicialMesh) -> f64 {
    (0..mesh.cell_count())
        .flat_map(|c| height_ratios(&mesh.cell_points(c)))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], low: f64, high: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        let width = (high - low) / bins as f64;
        let edges = (0..=bins).map(|i| low + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = ((v - low) / width).floor();
            let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
            counts[idx] += 1;
        }
        Self { edges, counts }
    }

    /// `bin_low,bin_high,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportQuantity {
    AngleDegrees,
    HeightRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub quantity: ReportQuantity,
    pub histogram: Histogram,
    pub cell_count: usize,
    pub bad_count: usize,
    pub bad_percent: f64,
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub energy: f64,
}

/// Default bin counts: 90 over `[0°, 180°]` for angles, 100 over `[-1, 1]`
/// for height ratios.
pub fn default_bins(dim: usize) -> usize {
    if dim == 2 {
        90
    } else {
        100
    }
}

/// Histogram and summary statistics of all planar angles (2D, degrees) or
/// all height ratios (3D).
pub fn quality_report(
    mesh: &SimplicialMesh,
    config: &EnergyConfig,
    bins: usize,
) -> Result<QualityReport, QualityError> {
    let (quantity, values, low, high) = if mesh.dim() == 2 {
        let values: Vec<f64> = (0..mesh.cell_count())
            .flat_map(|c| vertex_angles(&triangle(&mesh.cell_points(c))))
            .map(f64::to_degrees)
            .collect();
        (ReportQuantity::AngleDegrees, values, 0.0, 180.0)
    } else {
        let values: Vec<f64> = (0..mesh.cell_count())
            .flat_map(|c| height_ratios(&mesh.cell_points(c)))
            .collect();
        (ReportQuantity::HeightRatio, values, -1.0, 1.0)
    };
    let count = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    let bad = bad_cells(mesh).len();
    let cells = mesh.cell_count();
    Ok(QualityReport {
        quantity,
        histogram: Histogram::new(&values, low, high, bins),
        cell_count: cells,
        bad_count: bad,
        bad_percent: if cells == 0 { 0.0 } else { 100.0 * bad as f64 / cells as f64 },
        mean,
        stddev: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        energy: evaluate(mesh, config)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn one_cell(points: Vec<Point>) -> SimplicialMesh {
        let cell: Vec<usize> = (0..points.len()).collect();
        SimplicialMesh::new(points[0].dim(), points, cell).unwrap()
    }

    fn equilateral() -> SimplicialMesh {
        one_cell(vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(0.5, SQRT3 / 2.0),
        ])
    }

    fn right() -> SimplicialMesh {
        one_cell(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)])
    }

    #[test]
    fn f_n_examples() {
        let eq = equilateral().cell_points(0);
        assert!(f_n(&eq, 0.5).abs() < 1e-14);
        let tet = single_tet().cell_points(0);
        assert!((f_n(&tet, 0.5) - 1.0 / 6.0).abs() < 1e-14);
        assert!((f_n(&right().cell_points(0), 0.5) - 0.5).abs() < 1e-14);
        let flat = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        assert_eq!(f_n(&flat, 0.5), 1.5);
    }

    #[test]
    fn ep_examples() {
        for p in [1, 2, 4, 7] {
            assert!(energy_ep(&equilateral(), p).abs() < 1e-13);
        }
        // Angles 90, 45, 45: |2cos - 1|^2 = 1, (√2 - 1)^2, (√2 - 1)^2.
        let expected = 1.0 + 2.0 * (2f64.sqrt() - 1.0).powi(2);
        assert!((energy_ep(&right(), 2) - expected).abs() < 1e-12);
        assert!((expected - 1.343_145_7).abs() < 1e-7);
    }

    #[test]
    fn degenerate_cell_contributes_three_to_the_p() {
        let pts = vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(2.0, 0.0),
        ];
        let m = SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap();
        assert_eq!(energy_ep(&m, 4), 3.0 * 81.0);
        assert_eq!(energy_einfty(&m), 1.5);
    }

    #[test]
    fn einfty_examples() {
        assert!(energy_einfty(&equilateral()).abs() < 1e-14);
        assert!((energy_einfty(&right()) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn angle_energy_examples() {
        let eq = equilateral();
        assert!(energy_cos(&eq).unwrap().abs() < 1e-14);
        assert!((energy_max(&eq).unwrap() - FRAC_PI_3).abs() < 1e-14);
        assert!((energy_min(&eq).unwrap() - FRAC_PI_3).abs() < 1e-14);
        let r = right();
        assert!((energy_cos(&r).unwrap() - 1.0).abs() < 1e-14);
        assert!((energy_max(&r).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((energy_min(&r).unwrap() - FRAC_PI_4).abs() < 1e-14);
        assert!((energy_max(&square2()).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!(matches!(energy_max(&single_tet()), Err(QualityError::NotPlanar(_))));
    }

    #[test]
    fn regular_cells_have_unit_mean_ratio() {
        assert!((energy_imr(&equilateral()) - 1.0).abs() < 1e-14);
        assert!((energy_imr(&single_tet()) - 1.0).abs() < 1e-14);
        let w = w3_inv();
        let wm = [[1.0, 0.5, 0.5], [0.0, SQRT3 / 2.0, SQRT3 / 6.0], [0.0, 0.0, (2f64 / 3.0).sqrt()]];
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| wm[i][k] * w[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn inverted_cell_hits_barrier() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(0.0, 1.0), Point::xy(1.0, 0.0)];
        assert_eq!(inverse_mean_ratio(&pts), BARRIER_SENTINEL);
        let flat = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        assert_eq!(inverse_mean_ratio(&flat), BARRIER_SENTINEL);
    }

    #[test]
    fn combined_examples() {
        let cfg = EnergyConfig::with_barrier(4);
        assert!((energy_combined(&equilateral(), &cfg) - 1.0).abs() < 1e-12);
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let mut scaled = m.clone();
        for v in 0..m.vertex_count() {
            scaled.set_vertex(v, m.vertex(v).scale(2.0));
        }
        let a = energy_combined(&m, &cfg);
        let b = energy_combined(&scaled, &cfg);
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn reports() {
        let r = quality_report(&equilateral(), &EnergyConfig::default(), 90).unwrap();
        assert!((r.mean - 60.0).abs() < 1e-9);
        assert!(r.stddev < 1e-9);
        assert_eq!(r.bad_count, 0);
        assert_eq!(r.bad_percent, 0.0);
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 3);

        let r = quality_report(&right(), &EnergyConfig::default(), 90).unwrap();
        assert_eq!(r.bad_count, 1);
        assert_eq!(r.bad_percent, 100.0);
        assert!((r.max - 90.0).abs() < 1e-12);
        // 90 degrees falls in the bin starting at 90.
        assert_eq!(r.histogram.counts[45], 1);

        let r = quality_report(&single_tet(), &EnergyConfig::default(), 100).unwrap();
        assert_eq!(r.quantity, ReportQuantity::HeightRatio);
        assert_eq!(r.bad_count, 0);
        assert!((r.mean - 1.0 / 3.0).abs() < 1e-14);
        assert!(r.stddev < 1e-14);
    }

    #[test]
    fn histogram_csv() {
        let h = Histogram::new(&[0.1, 0.6, 0.9, 1.0], 0.0, 1.0, 2);
        assert_eq!(h.counts, vec![1, 3]);
        assert_eq!(h.to_csv(), "bin_low,bin_high,count\n0,0.5,1\n0.5,1,3\n");
    }

    #[test]
    fn config_validation() {
        assert!(EnergyConfig { p: 0, ..EnergyConfig::default() }.validate().is_err());
        assert!(EnergyConfig { k_n: 0.0, ..EnergyConfig::default() }.validate().is_err());
        assert!(EnergyConfig { k_n: 1.0, ..EnergyConfig::default() }.validate().is_ok());
    }
}
