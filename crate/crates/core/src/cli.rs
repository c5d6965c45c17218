//! Command-line interface. `main.rs` only parses arguments and calls
//! [`run`]; every subcommand is an ordinary function so tests can drive it.
//!
//! Exit codes: 0 when the command succeeds and the checked property holds,
//! 1 when the property fails, 2 on any operational error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::connectivity::{find_lonely_vertices, repair_connectivity_2d, ConnectivityError};
use crate::geometry::{combinations, equatorial_ball, is_k_well_centered, GeometryError, Point};
use crate::mesh::{load_mesh, save_mesh, MeshError, MeshFormat, SimplicialMesh};
use crate::optimize::{optimize_schedule, OptimizationSettings, OptimizeError, Stage};
use crate::quality::{default_bins, quality_report, EnergyConfig, QualityError, QualityReport};
use crate::render::{render_svg, RenderStyle};
use crate::verify::{verify_all, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Equatorial-ball margin (relative to `R`) below which the two
/// well-centeredness tests may legitimately disagree.
pub const CHECK_MARGIN: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Parser)]
#[command(name = "wcmesh", version, about = "Well-centered mesh checking and optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MeshInput {
    /// Mesh file: `.off`, or a `.node`/`.ele` file or their common stem.
    pub mesh: PathBuf,
    /// Input format: triangle, tetgen or off. Detected when omitted.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that every cell is well-centered in the requested dimensions.
    Check {
        #[command(flatten)]
        input: MeshInput,
        /// Comma-separated face dimensions; the mesh dimension by default.
        #[arg(long)]
        dims: Option<String>,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Relocate interior vertices according to an energy schedule.
    Optimize {
        #[command(flatten)]
        input: MeshInput,
        /// Stages such as `E4:500,E6:500,~E10:500`; `~` adds the barrier.
        #[arg(long, allow_hyphen_values = true)]
        schedule: String,
        /// Output mesh; traces and reports are written next to it.
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated vertex indices allowed to move.
        #[arg(long)]
        free: Option<String>,
    },
    /// Angle (2D) or height-ratio (3D) histogram and statistics.
    Report {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long)]
        bins: Option<usize>,
        /// Stem for `<stem>.json` and `<stem>.csv`; JSON to stdout if omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw a planar mesh as SVG, shaded by largest angle.
    Render {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated `stroke`, `nostroke`, `size=<px>`.
        #[arg(long, default_value = "")]
        style: String,
    },
    /// Detect lonely vertices and remove them by edge flips where possible.
    Preprocess {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the randomized and exhaustive theorem suites.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value = "2,3")]
        dims: String,
        /// Write the JSON report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses a schedule such as `E4:500,~E6:200`. An empty string is an empty
/// schedule.
pub fn parse_schedule(spec: &str) -> Result<Vec<Stage>, CliError> {
    let bad = |item: &str| CliError::Argument(format!("bad schedule stage `{item}`"));
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (barrier, rest) = match item.strip_prefix('~') {
                Some(r) => (true, r),
                None => (false, item),
            };
            let (energy, iters) = rest.split_once(':').ok_or_else(|| bad(item))?;
            let p: u32 = energy
                .strip_prefix('E')
                .and_then(|p| p.parse().ok())
                .filter(|&p| p > 0)
                .ok_or_else(|| bad(item))?;
            let iterations: usize = iters.parse().map_err(|_| bad(item))?;
            let config = if barrier {
                EnergyConfig::with_barrier(p)
            } else {
                EnergyConfig::ep(p)
            };
            Ok(Stage { config, iterations })
        })
        .collect()
}

pub fn parse_index_list(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Argument(format!("`{s}` is not a non-negative integer")))
        })
        .collect()
}

fn input_format(input: &MeshInput) -> Result<MeshFormat, CliError> {
    match &input.format {
        Some(f) => Ok(f.parse()?),
        None => Ok(MeshFormat::detect(&input.mesh)?),
    }
}

pub fn load_input(input: &MeshInput) -> Result<SimplicialMesh, CliError> {
    let format = input_format(input)?;
    Ok(load_mesh(&input.mesh, format)?)
}

/// `.off` paths are written as OFF, anything else as `.node`/`.ele`.
pub fn output_format(path: &Path, dim: usize) -> MeshFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("off") | Some("OFF") => MeshFormat::Off,
        _ if dim == 3 => MeshFormat::TetGen,
        _ => MeshFormat::Triangle,
    }
}

/// `path` without a mesh extension, used to name companion artifacts.
fn artifact_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") | Some("off") | Some("OFF") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailingCell {
    pub cell: usize,
    /// Requested dimensions in which the cell is not well-centered.
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub cell_count: usize,
    pub dims: Vec<usize>,
    pub passed: bool,
    pub failing: Vec<FailingCell>,
}

/// Decides whether every `k`-face of a cell is well-centered, requiring the
/// barycentric and equatorial-ball tests to agree.
fn cell_k_well_centered(points: &[Point], k: usize) -> Result<bool, CliError> {
    let bary = match is_k_well_centered(points, k) {
        Ok(b) => b,
        Err(GeometryError::DegenerateFace(_)) | Err(GeometryError::DegenerateSimplex) => false,
        Err(e) => return Err(CliError::Internal(e.to_string())),
    };
    if k == 1 {
        // An edge always contains its midpoint; the ball test is vacuous.
        return Ok(bary);
    }
    let mut oracle = true;
    let mut margin = f64::INFINITY;
    for subset in combinations(points.len(), k + 1) {
        let face: Vec<Point> = subset.iter().map(|&i| points[i]).collect();
        match equatorial_ball(&face) {
            Ok(b) => {
                oracle &= b.strictly_outside;
                margin = margin.min(b.margin);
            }
            Err(_) => {
                oracle = false;
                margin = 0.0;
            }
        }
    }
    if bary != oracle && margin > CHECK_MARGIN {
        return Err(CliError::Internal(format!(
            "well-centeredness tests disagree with margin {margin:e}"
        )));
    }
    Ok(bary && oracle)
}

pub fn check_mesh(mesh: &SimplicialMesh, dims: &[usize]) -> Result<CheckReport, CliError> {
    if let Some(&k) = dims.iter().find(|&&k| k == 0 || k > mesh.dim()) {
        return Err(CliError::Argument(format!(
            "face dimension {k} is not in 1..={}",
            mesh.dim()
        )));
    }
    let mut failing = Vec::new();
    for c in 0..mesh.cell_count() {
        let points = mesh.cell_points(c);
        let mut bad = Vec::new();
        for &k in dims {
            if !cell_k_well_centered(&points, k)? {
                bad.push(k);
            }
        }
        if !bad.is_empty() {
            failing.push(FailingCell { cell: c, dims: bad });
        }
    }
    Ok(CheckReport {
        cell_count: mesh.cell_count(),
        dims: dims.to_vec(),
        passed: failing.is_empty(),
        failing,
    })
}

pub fn cmd_check(
    input: &MeshInput,
    dims: Option<&str>,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mesh = load_input(input)?;
    let dims = match dims {
        Some(d) => parse_index_list(d)?,
        None => vec![mesh.dim()],
    };
    let report = check_mesh(&mesh, &dims)?;
    emit_json(&report, output, out)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_PROPERTY_FAILS })
}

#[derive(Debug, Clone, Serialize)]
pub struct BeforeAfter {
    pub before: QualityReport,
    pub after: QualityReport,
}

/// Runs the schedule and writes the mesh, `<stem>.trace.csv`,
/// `<stem>.trace.json` and `<stem>.report.json`.
pub fn cmd_optimize(
    input: &MeshInput,
    schedule: &str,
    output: &Path,
    free: Option<&str>,
) -> Result<i32, CliError> {
    let mesh = load_input(input)?;
    let mut settings = OptimizationSettings::with_schedule(parse_schedule(schedule)?);
    if let Some(free) = free {
        settings.free_vertices = Some(parse_index_list(free)?);
    }
    let (result, trace) = optimize_schedule(&mesh, &settings)?;

    for v in 0..mesh.vertex_count() {
        let moved = result.vertex(v).coords() != mesh.vertex(v).coords();
        if moved && mesh.is_boundary_vertex(v) {
            return Err(CliError::Internal(format!("boundary vertex {v} moved")));
        }
    }
    if result.connectivity() != mesh.connectivity() {
        return Err(CliError::Internal("connectivity changed".into()));
    }

    let config = settings
        .schedule
        .first()
        .map(|s| s.config)
        .unwrap_or_default();
    let bins = default_bins(mesh.dim());
    let reports = BeforeAfter {
        before: quality_report(&mesh, &config, bins)?,
        after: quality_report(&result, &config, bins)?,
    };
    save_mesh(&result, output, output_format(output, result.dim()))?;
    let stem = artifact_stem(output);
    fs::write(with_suffix(&stem, ".trace.csv"), trace.to_csv())?;
    fs::write(
        with_suffix(&stem, ".trace.json"),
        serde_json::to_string_pretty(&trace)?,
    )?;
    fs::write(
        with_suffix(&stem, ".report.json"),
        serde_json::to_string_pretty(&reports)?,
    )?;
    info!(
        "bad cells {} -> {} in {:.2}s",
        reports.before.bad_count, reports.after.bad_count, trace.elapsed_seconds
    );
    Ok(EXIT_OK)
}

pub fn cmd_report(
    input: &MeshInput,
    bins: Option<usize>,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mesh = load_input(input)?;
    let bins = bins.unwrap_or_else(|| default_bins(mesh.dim()));
    if bins == 0 {
        return Err(CliError::Argument("--bins must be positive".into()));
    }
    let report = quality_report(&mesh, &EnergyConfig::default(), bins)?;
    match output {
        Some(stem) => {
            fs::write(with_suffix(stem, ".json"), serde_json::to_string_pretty(&report)?)?;
            fs::write(with_suffix(stem, ".csv"), report.histogram.to_csv())?;
        }
        None => emit_json(&report, None, out)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_render(input: &MeshInput, output: &Path, style: &str) -> Result<i32, CliError> {
    let style: RenderStyle = style.parse().map_err(CliError::Argument)?;
    let mesh = load_input(input)?;
    fs::write(output, render_svg(&mesh, &style)?)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct PreprocessReport {
    pub lonely_before: usize,
    pub flips: Vec<((usize, usize), (usize, usize))>,
    pub residual: crate::connectivity::LonelyVertexReport,
}

/// Repairs planar meshes by flips; tetrahedral meshes are only analyzed.
/// Writes the mesh and `<stem>.lonely.json`; exits 1 if lonely vertices
/// remain.
pub fn cmd_preprocess(input: &MeshInput, output: &Path) -> Result<i32, CliError> {
    let mesh = load_input(input)?;
    let before = find_lonely_vertices(&mesh);
    let (result, report) = if mesh.dim() == 2 {
        let outcome = repair_connectivity_2d(&mesh)?;
        let report = PreprocessReport {
            lonely_before: before.len(),
            flips: outcome.flips,
            residual: outcome.residual,
        };
        (outcome.mesh, report)
    } else {
        let report = PreprocessReport {
            lonely_before: before.len(),
            flips: Vec::new(),
            residual: before,
        };
        (mesh, report)
    };
    save_mesh(&result, output, output_format(output, result.dim()))?;
    fs::write(
        with_suffix(&artifact_stem(output), ".lonely.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(if report.residual.is_empty() {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILS
    })
}

pub fn cmd_verify(
    seed: u64,
    samples: usize,
    dims: &str,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(i32, VerifyReport), CliError> {
    let dims = parse_index_list(dims)?;
    if let Some(&d) = dims.iter().find(|&&d| !(2..=3).contains(&d)) {
        return Err(CliError::Argument(format!("verify supports dims 2 and 3, got {d}")));
    }
    let report = verify_all(seed, samples, &dims);
    for suite in &report.suites {
        writeln!(out, "{}", suite.summary_line())?;
    }
    if let Some(path) = output {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    let code = if report.passed() { EXIT_OK } else { EXIT_PROPERTY_FAILS };
    Ok((code, report))
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

/// Runs a parsed command and maps errors to exit code 2.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Check { input, dims, output } => {
            cmd_check(input, dims.as_deref(), output.as_deref(), out)
        }
        Command::Optimize {
            input,
            schedule,
            output,
            free,
        } => cmd_optimize(input, schedule, output, free.as_deref()),
        Command::Report { input, bins, output } => cmd_report(input, *bins, output.as_deref(), out),
        Command::Render { input, output, style } => cmd_render(input, output, style),
        Command::Preprocess { input, output } => cmd_preprocess(input, output),
        Command::Verify {
            seed,
            samples,
            dims,
            output,
        } => cmd_verify(*seed, *samples, dims, output.as_deref(), out).map(|(code, _)| code),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
