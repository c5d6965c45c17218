//! Interior vertex relocation by nonlinear conjugate gradient.
//!
//! Only the coordinates of free (by default: all interior) vertices change.
//! Boundary coordinates and the connectivity table are never written.
//! Gradients are central finite differences; the search direction is
//! Polak-Ribière with `β` clamped at zero plus periodic restarts, and every
//! step is found by Armijo backtracking, so each accepted iterate strictly
//! lowers the active energy.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::SimplicialMesh;
use crate::quality::{self, EnergyConfig, QualityError, Reduction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid optimization settings: {0}")]
    InvalidSettings(String),
    #[error("vertex {0} is not an interior vertex and cannot move")]
    NotInterior(usize),
    #[error("vertex {0} does not exist")]
    NoSuchVertex(usize),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    /// First trial step length in coordinate units. `None` means a tenth of
    /// the mean edge length.
    pub initial_step: Option<f64>,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Later searches start from `growth` times the previous accepted step.
    pub growth: f64,
    /// The search fails once a trial step is shorter than this fraction of
    /// the mean edge length.
    pub min_step_scale: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            initial_step: None,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            growth: 2.0,
            min_step_scale: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub config: EnergyConfig,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSettings {
    /// Iteration count used by [`optimize`].
    pub max_iterations: usize,
    /// Finite-difference step as a fraction of the mean incident edge length.
    pub fd_step_scale: f64,
    /// `None` restarts every `number of free coordinates` iterations.
    pub cg_restart_interval: Option<usize>,
    pub line_search: LineSearch,
    /// Stages run by [`optimize_schedule`].
    pub schedule: Vec<Stage>,
    /// Restricts motion to these vertices; all interior vertices if `None`.
    pub free_vertices: Option<Vec<usize>>,
}

impl Default for OptimizationSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            fd_step_scale: 1e-6,
            cg_restart_interval: None,
            line_search: LineSearch::default(),
            schedule: Vec::new(),
            free_vertices: None,
        }
    }
}

impl OptimizationSettings {
    pub fn with_schedule(schedule: Vec<Stage>) -> Self {
        Self {
            schedule,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::InvalidSettings(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.fd_step_scale > 0.0 && self.fd_step_scale.is_finite()) {
            return bad("fd_step_scale must be positive");
        }
        if self.cg_restart_interval == Some(0) {
            return bad("cg_restart_interval must be positive");
        }
        let ls = &self.line_search;
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return bad("line search shrink factor must lie in (0, 1)");
        }
        if !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return bad("sufficient decrease constant must lie in (0, 1)");
        }
        if !(ls.growth >= 1.0) {
            return bad("line search growth must be at least 1");
        }
        if !(ls.min_step_scale > 0.0) {
            return bad("minimum step must be positive");
        }
        if matches!(ls.initial_step, Some(s) if !(s > 0.0)) {
            return bad("initial step must be positive");
        }
        for stage in &self.schedule {
            stage.config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationLimit,
    LineSearchFailed,
    StationaryPoint,
    NoFreeVertices,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: usize,
    /// Global iteration count; each stage starts with a record of step 0.
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub bad_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub config: EnergyConfig,
    pub requested_iterations: usize,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
    pub stages: Vec<StageSummary>,
    pub elapsed_seconds: f64,
}

impl OptimizationTrace {
    /// `iter,energy,grad_norm,step,bad_count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,grad_norm,step,bad_count\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{}",
                r.iter, r.energy, r.grad_norm, r.step, r.bad_count
            );
        }
        out
    }

    /// True iff within every stage each accepted iterate has strictly lower
    /// energy than the one before.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.records
            .windows(2)
            .filter(|w| w[0].stage == w[1].stage)
            .all(|w| w[1].energy < w[0].energy)
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.records.last().map(|r| r.energy)
    }
}

/// Central-difference gradient of the energy with respect to each
/// coordinate of `free` vertices, in vertex-major order.
///
/// The step for every coordinate of vertex `v` is `fd_step_scale` times the
/// mean length of the edges incident to `v`.
pub fn numerical_gradient(
    mesh: &SimplicialMesh,
    config: &EnergyConfig,
    free: &[usize],
    fd_step_scale: f64,
) -> Vec<f64> {
    let mut work = Workspace::new(mesh.clone(), *config, free.to_vec());
    work.gradient(fd_step_scale)
}

/// Mesh, energy and free set for one optimization stage. Owns the mesh
/// exclusively while coordinates are being rewritten.
struct Workspace {
    mesh: SimplicialMesh,
    config: EnergyConfig,
    free: Vec<usize>,
}

impl Workspace {
    fn new(mesh: SimplicialMesh, config: EnergyConfig, free: Vec<usize>) -> Self {
        Self { mesh, config, free }
    }

    /// Objective to minimize: the energy, negated for max-min energies.
    fn energy(&self) -> f64 {
        let e = quality::reduce_cells(&self.mesh, &self.config);
        match self.config.reduction() {
            Reduction::Min => -e,
            _ => e,
        }
    }

    /// Energy of the cells around `v`, or the full objective for energies
    /// that are not sums over cells.
    fn local_energy(&self, v: usize) -> f64 {
        match self.config.reduction() {
            Reduction::Sum => self
                .mesh
                .vertex_cells(v)
                .iter()
                .map(|&c| quality::cell_energy(&self.config, &self.mesh.cell_points(c)))
                .sum(),
            _ => self.energy(),
        }
    }

    fn coordinates(&self) -> Vec<f64> {
        self.free
            .iter()
            .flat_map(|&v| self.mesh.vertex(v).coords().to_vec())
            .collect()
    }

    fn set_coordinates(&mut self, x: &[f64]) {
        let d = self.mesh.dim();
        for (i, &v) in self.free.iter().enumerate() {
            self.mesh.set_vertex(v, Point::new(&x[i * d..(i + 1) * d]));
        }
    }

    fn gradient(&mut self, fd_step_scale: f64) -> Vec<f64> {
        let d = self.mesh.dim();
        let mut g = Vec::with_capacity(self.free.len() * d);
        for idx in 0..self.free.len() {
            let v = self.free[idx];
            let h = fd_step_scale * self.mesh.mean_incident_edge_length(v);
            let original = self.mesh.vertex(v);
            for k in 0..d {
                let mut p = original;
                p.coords_mut()[k] = original.coords()[k] + h;
                self.mesh.set_vertex(v, p);
                let plus = self.local_energy(v);
                p.coords_mut()[k] = original.coords()[k] - h;
                self.mesh.set_vertex(v, p);
                let minus = self.local_energy(v);
                self.mesh.set_vertex(v, original);
                g.push((plus - minus) / (2.0 * h));
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn resolve_free(mesh: &SimplicialMesh, settings: &OptimizationSettings) -> Result<Vec<usize>, OptimizeError> {
    match &settings.free_vertices {
        None => Ok(mesh.interior_vertices()),
        Some(list) => {
            let mut free = list.clone();
            free.sort_unstable();
            free.dedup();
            for &v in &free {
                if v >= mesh.vertex_count() {
                    return Err(OptimizeError::NoSuchVertex(v));
                }
                if mesh.is_boundary_vertex(v) {
                    return Err(OptimizeError::NotInterior(v));
                }
            }
            Ok(free)
        }
    }
}

/// Runs `settings.max_iterations` conjugate-gradient iterations on the
/// energy selected by `config`.
pub fn optimize(
    mesh: &SimplicialMesh,
    config: &EnergyConfig,
    settings: &OptimizationSettings,
) -> Result<(SimplicialMesh, OptimizationTrace), OptimizeError> {
    let single = OptimizationSettings {
        schedule: vec![Stage {
            config: *config,
            iterations: settings.max_iterations,
        }],
        ..settings.clone()
    };
    optimize_schedule(mesh, &single)
}

/// Runs every stage of `settings.schedule` in order, each starting from the
/// previous stage's output. An empty schedule returns the input unchanged.
pub fn optimize_schedule(
    mesh: &SimplicialMesh,
    settings: &OptimizationSettings,
) -> Result<(SimplicialMesh, OptimizationTrace), OptimizeError> {
    settings.validate()?;
    for stage in &settings.schedule {
        // Rejects angle energies on 3D meshes.
        quality::evaluate(mesh, &stage.config)?;
    }
    let free = resolve_free(mesh, settings)?;
    let start = Instant::now();
    let mut trace = OptimizationTrace::default();
    let mut current = mesh.clone();
    let mut iter = 0;
    for (index, stage) in settings.schedule.iter().enumerate() {
        let mut work = Workspace::new(current, stage.config, free.clone());
        let summary = run_stage(&mut work, index, stage, settings, &mut iter, &mut trace);
        trace.stages.push(summary);
        current = work.mesh;
    }
    trace.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok((current, trace))
}

fn run_stage(
    work: &mut Workspace,
    stage_index: usize,
    stage: &Stage,
    settings: &OptimizationSettings,
    iter: &mut usize,
    trace: &mut OptimizationTrace,
) -> StageSummary {
    let ls = &settings.line_search;
    let mut energy = work.energy();
    let mut x = work.coordinates();
    let mut g = work.gradient(settings.fd_step_scale);
    let mut gnorm = norm(&g);
    let record = |energy: f64, grad_norm: f64, step: f64, iter: usize, work: &Workspace| TraceRecord {
        stage: stage_index,
        iter,
        energy,
        grad_norm,
        step,
        bad_count: quality::bad_cells(&work.mesh).len(),
    };
    trace.records.push(record(energy, gnorm, 0.0, *iter, work));

    let mut summary = StageSummary {
        config: stage.config,
        requested_iterations: stage.iterations,
        iterations: 0,
        stop_reason: StopReason::IterationLimit,
    };
    if x.is_empty() {
        summary.stop_reason = StopReason::NoFreeVertices;
        return summary;
    }

    let mean_edge = work.mesh.mean_edge_length();
    let min_step = ls.min_step_scale * mean_edge;
    let restart = settings.cg_restart_interval.unwrap_or(x.len()).max(1);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut prev_step: Option<f64> = None;
    let mut since_restart = 0;

    for _ in 0..stage.iterations {
        if gnorm == 0.0 || !gnorm.is_finite() {
            summary.stop_reason = StopReason::StationaryPoint;
            break;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            since_restart = 0;
        }
        let dnorm = norm(&d);
        let mut length = match prev_step {
            Some(s) => ls.growth * s,
            None => ls.initial_step.unwrap_or(0.1 * mean_edge),
        };

        let mut accepted = None;
        let mut trial = vec![0.0; x.len()];
        while length >= min_step {
            let alpha = length / dnorm;
            for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&d) {
                *t = xi + alpha * di;
            }
            work.set_coordinates(&trial);
            let e = work.energy();
            if e < energy && e <= energy + ls.sufficient_decrease * alpha * slope {
                accepted = Some((e, length));
                break;
            }
            length *= ls.shrink;
        }
        let Some((e, length)) = accepted else {
            work.set_coordinates(&x);
            summary.stop_reason = StopReason::LineSearchFailed;
            break;
        };

        x.clone_from(&trial);
        energy = e;
        prev_step = Some(length);
        *iter += 1;
        summary.iterations += 1;

        let g_new = work.gradient(settings.fd_step_scale);
        since_restart += 1;
        let beta = if since_restart >= restart {
            since_restart = 0;
            0.0
        } else {
            let diff: f64 = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
            (diff / (gnorm * gnorm)).max(0.0)
        };
        for (di, gi) in d.iter_mut().zip(&g_new) {
            *di = -gi + beta * *di;
        }
        g = g_new;
        gnorm = norm(&g);
        trace.records.push(record(energy, gnorm, length, *iter, work));
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::equatorial_ball_test;
    use crate::mesh::fixtures::*;

    fn assert_constraints(before: &SimplicialMesh, after: &SimplicialMesh) {
        assert_eq!(before.connectivity(), after.connectivity());
        for v in 0..before.vertex_count() {
            if before.is_boundary_vertex(v) {
                assert_eq!(before.vertex(v), after.vertex(v));
            }
        }
    }

    #[test]
    fn hexagon_converges_to_center() {
        let m = hexagon_fan(Point::xy(0.23, -0.17));
        let settings = OptimizationSettings {
            max_iterations: 60,
            ..Default::default()
        };
        let (out, trace) = optimize(&m, &EnergyConfig::ep(4), &settings).unwrap();
        assert_constraints(&m, &out);
        assert!(trace.is_strictly_decreasing());
        let c = out.vertex(6);
        assert!(c.norm() < 1e-4, "center ended at {c:?}");
        assert!(quality::energy_ep(&out, 4) < 1e-12);
        for cell in 0..out.cell_count() {
            assert!(equatorial_ball_test(&out.cell_points(cell)).unwrap());
        }
    }

    #[test]
    fn square_fan_cannot_become_acute() {
        let mut m = square_fan();
        m.set_vertex(4, Point::xy(0.3, 0.6));
        let before = quality::energy_ep(&m, 4);
        let settings = OptimizationSettings {
            max_iterations: 40,
            ..Default::default()
        };
        let (out, trace) = optimize(&m, &EnergyConfig::ep(4), &settings).unwrap();
        assert_constraints(&m, &out);
        assert!(trace.is_strictly_decreasing());
        assert!(quality::energy_ep(&out, 4) < before);
        assert!(!quality::bad_cells(&out).is_empty());
    }

    #[test]
    fn symmetric_center_has_tiny_gradient() {
        let m = hexagon_fan(Point::xy(0.0, 0.0));
        let g = numerical_gradient(&m, &EnergyConfig::ep(4), &[6], 1e-6);
        assert!(norm(&g) < 1e-6);
    }

    #[test]
    fn displaced_center_gradient_points_away_from_center() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let g = numerical_gradient(&m, &EnergyConfig::ep(4), &[6], 1e-6);
        // Descent direction -g must point back toward the origin.
        let toward = [-0.2, -0.1];
        assert!(-dot(&g, &toward) > 0.0);
        // And a short step along -g lowers the energy.
        let mut moved = m.clone();
        let step = 1e-3 / norm(&g);
        moved.set_vertex(6, Point::xy(0.2 - step * g[0], 0.1 - step * g[1]));
        assert!(quality::energy_ep(&moved, 4) < quality::energy_ep(&m, 4));
    }

    #[test]
    fn empty_schedule_is_identity() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let (out, trace) = optimize_schedule(&m, &OptimizationSettings::default()).unwrap();
        assert_eq!(out, m);
        assert!(trace.records.is_empty());
    }

    #[test]
    fn staged_schedule_reaches_same_optimum() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let settings = OptimizationSettings::with_schedule(vec![
            Stage { config: EnergyConfig::ep(4), iterations: 30 },
            Stage { config: EnergyConfig::ep(10), iterations: 30 },
        ]);
        let (out, trace) = optimize_schedule(&m, &settings).unwrap();
        assert_eq!(trace.stages.len(), 2);
        assert!(trace.is_strictly_decreasing());
        assert!(out.vertex(6).norm() < 1e-4);
    }

    #[test]
    fn boundary_vertex_cannot_be_freed() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let settings = OptimizationSettings {
            free_vertices: Some(vec![0]),
            ..Default::default()
        };
        assert_eq!(
            optimize(&m, &EnergyConfig::ep(4), &settings).unwrap_err(),
            OptimizeError::NotInterior(0)
        );
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let settings = OptimizationSettings {
            fd_step_scale: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            optimize(&m, &EnergyConfig::ep(4), &settings),
            Err(OptimizeError::InvalidSettings(_))
        ));
    }

    #[test]
    fn no_free_vertices_is_reported() {
        let (_, trace) = optimize(&square2(), &EnergyConfig::ep(4), &OptimizationSettings::default()).unwrap();
        assert_eq!(trace.stages[0].stop_reason, StopReason::NoFreeVertices);
    }

    #[test]
    fn trace_csv_header() {
        let m = hexagon_fan(Point::xy(0.2, 0.1));
        let settings = OptimizationSettings { max_iterations: 2, ..Default::default() };
        let (_, trace) = optimize(&m, &EnergyConfig::ep(4), &settings).unwrap();
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,energy,grad_norm,step,bad_count\n0,"));
        assert_eq!(csv.lines().count(), 1 + trace.records.len());
    }
}
