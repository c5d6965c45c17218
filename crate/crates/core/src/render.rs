//! SVG rendering of planar meshes, shaded by each triangle's largest angle.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::vertex_angles;
use crate::mesh::{MeshError, SimplicialMesh};

/// Angles within this many radians below 90° are drawn as right angles.
const RIGHT_ANGLE_TOLERANCE: f64 = 1e-9;

const MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    /// Width of the longer image side in pixels.
    pub size: u32,
    pub stroke: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            size: 800,
            stroke: true,
        }
    }
}

/// Parses comma-separated `stroke`, `nostroke` and `size=<px>` tokens.
impl FromStr for RenderStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut style = Self::default();
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token {
                "stroke" => style.stroke = true,
                "nostroke" => style.stroke = false,
                _ => {
                    let size = token
                        .strip_prefix("size=")
                        .and_then(|v| v.parse::<u32>().ok())
                        .filter(|&v| v > 0)
                        .ok_or_else(|| format!("unknown style token `{token}`"))?;
                    style.size = size;
                }
            }
        }
        Ok(style)
    }
}

/// Lightness in percent for a triangle whose largest angle is `theta`
/// radians: 92 up to 60°, falling linearly to 65 just below 90°, then 45 at
/// 90° falling linearly to 5 at 180°.
pub fn shade(theta: f64) -> f64 {
    let deg = theta.to_degrees();
    if theta >= std::f64::consts::FRAC_PI_2 - RIGHT_ANGLE_TOLERANCE {
        let t = ((deg - 90.0) / 90.0).clamp(0.0, 1.0);
        45.0 - 40.0 * t
    } else if deg <= 60.0 {
        92.0
    } else {
        92.0 - 27.0 * (deg - 60.0) / 30.0
    }
}

fn gray(lightness: f64) -> String {
    let v = (lightness * 2.55).round().clamp(0.0, 255.0) as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Fill color of every cell, in cell order.
pub fn cell_fills(mesh: &SimplicialMesh) -> Vec<String> {
    (0..mesh.cell_count())
        .map(|c| {
            let p = mesh.cell_points(c);
            let max = vertex_angles(&[p[0], p[1], p[2]]).into_iter().fold(0.0, f64::max);
            gray(shade(max))
        })
        .collect()
}

pub fn render_svg(mesh: &SimplicialMesh, style: &RenderStyle) -> Result<String, MeshError> {
    if mesh.dim() != 2 {
        return Err(MeshError::Unsupported(
            "only planar meshes can be rendered".into(),
        ));
    }
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in mesh.vertices() {
        let c = p.coords();
        xmin = xmin.min(c[0]);
        xmax = xmax.max(c[0]);
        ymin = ymin.min(c[1]);
        ymax = ymax.max(c[1]);
    }
    if mesh.vertex_count() == 0 {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let inner = (style.size as f64 - 2.0 * MARGIN).max(1.0);
    let scale = inner / span;
    let width = ((xmax - xmin) * scale + 2.0 * MARGIN).ceil();
    let height = ((ymax - ymin) * scale + 2.0 * MARGIN).ceil();
    let map = |x: f64, y: f64| (MARGIN + (x - xmin) * scale, MARGIN + (ymax - y) * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let stroke = if style.stroke {
        r##" stroke="#000000" stroke-width="0.5" stroke-linejoin="round""##
    } else {
        ""
    };
    let _ = writeln!(svg, r#"<g{stroke}>"#);
    for (cell, fill) in mesh.cells().zip(cell_fills(mesh)) {
        let pts: Vec<String> = cell
            .iter()
            .map(|&v| {
                let p = mesh.vertex(v);
                let (x, y) = map(p.coords()[0], p.coords()[1]);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::mesh::fixtures::*;

    #[test]
    fn shade_is_monotone_with_jump_at_right_angle() {
        let mut last = f64::INFINITY;
        for i in 0..=1800 {
            let s = shade((i as f64 / 10.0).to_radians());
            assert!(s <= last);
            last = s;
        }
        assert_eq!(shade(1.0), 92.0);
        assert!((shade(std::f64::consts::FRAC_PI_2 - 1e-6) - 65.0).abs() < 1e-3);
        assert_eq!(shade(std::f64::consts::FRAC_PI_2), 45.0);
        assert_eq!(shade(std::f64::consts::PI), 5.0);
    }

    #[test]
    fn style_parsing() {
        let s: RenderStyle = "nostroke,size=300".parse().unwrap();
        assert_eq!(s, RenderStyle { size: 300, stroke: false });
        assert!("size=0".parse::<RenderStyle>().is_err());
        assert!("bold".parse::<RenderStyle>().is_err());
    }

    #[test]
    fn equilateral_fan_is_lightest() {
        let fills = cell_fills(&hexagon_fan(Point::xy(0.0, 0.0)));
        assert!(fills.iter().all(|f| f == &gray(92.0)));
    }

    #[test]
    fn obtuse_cell_is_darker() {
        let moved = hexagon_fan(Point::xy(0.6, 0.1));
        let shades: Vec<f64> = (0..moved.cell_count())
            .map(|c| {
                let p = moved.cell_points(c);
                shade(vertex_angles(&[p[0], p[1], p[2]]).into_iter().fold(0.0, f64::max))
            })
            .collect();
        let darkest_acute = shades.iter().copied().filter(|&s| s >= 65.0).fold(100.0, f64::min);
        assert!(shades.iter().any(|&s| s <= 45.0 && s < darkest_acute));
    }

    #[test]
    fn rejects_tetrahedra() {
        assert!(render_svg(&single_tet(), &RenderStyle::default()).is_err());
    }
}
