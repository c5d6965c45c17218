//! Floating-point kernel for simplex geometry.
//!
//! Every routine here works on a simplex given as a slice of `k + 1`
//! [`Point`]s embedded in `m`-dimensional space (`k <= m <= 4`). Internally the
//! simplex is expressed in an orthonormal basis of its affine hull, built by
//! modified Gram-Schmidt on the edge vectors leaving vertex 0, so that the
//! circumcenter system is conditioned on the simplex shape and not on where
//! it sits in space.

use std::fmt;

use thiserror::Error;

/// Largest embedding dimension supported by [`Point`].
pub const MAX_DIM: usize = 4;

/// A simplex is degenerate when `k! * volume / diameter^k` drops below this.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("a simplex needs between 1 and {max} vertices, got {0}", max = MAX_DIM + 1)]
    InvalidVertexCount(usize),
    #[error("vertices have mixed embedding dimensions")]
    MixedDimensions,
    #[error("a {simplex}-simplex cannot be embedded in {ambient} dimensions")]
    DimensionMismatch { simplex: usize, ambient: usize },
    #[error("degenerate simplex")]
    DegenerateSimplex,
    #[error("facet opposite vertex {0} is degenerate")]
    DegenerateFacet(usize),
    #[error("a {0}-face is degenerate")]
    DegenerateFace(usize),
    #[error("vertex index {index} out of range for a simplex with {count} vertices")]
    VertexIndex { index: usize, count: usize },
    #[error("face dimension {face} must lie in 1..={simplex}")]
    FaceDimension { face: usize, simplex: usize },
}

/// A point in 1 to 4 dimensional space.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    /// Builds a point from its coordinates.
    ///
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "point dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self::new(&[x, y])
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new(&[x, y, z])
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.coords[i] -= other.coords[i];
        }
        out
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.coords[i] += other.coords[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut out = *self;
        for c in out.coords_mut() {
            *c *= s;
        }
        out
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.coords()).finish()
    }
}

/// Circumcenter and circumradius of a simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circumsphere {
    pub center: Point,
    pub radius: f64,
}

/// Orthonormal frame of a simplex's affine hull, i.e. a thin QR
/// factorization of its edge matrix.
#[derive(Clone, Copy)]
struct Frame {
    k: usize,
    origin: Point,
    basis: [Point; MAX_DIM],
    /// `r[i][j] = q_i . e_j` for `i <= j`, zero below the diagonal.
    r: [[f64; MAX_DIM]; MAX_DIM],
    diameter: f64,
}

impl Frame {
    fn new(vertices: &[Point]) -> Result<Self, GeometryError> {
        let count = vertices.len();
        if count == 0 || count > MAX_DIM + 1 {
            return Err(GeometryError::InvalidVertexCount(count));
        }
        let ambient = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != ambient) {
            return Err(GeometryError::MixedDimensions);
        }
        let k = count - 1;
        if k > ambient {
            return Err(GeometryError::DimensionMismatch {
                simplex: k,
                ambient,
            });
        }

        let origin = vertices[0];
        let mut diameter: f64 = 0.0;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diameter = diameter.max(a.distance(b));
            }
        }

        let zero = Point::origin(ambient);
        let mut basis = [zero; MAX_DIM];
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for j in 0..k {
            let edge = vertices[j + 1].sub(&origin);
            let mut w = edge;
            for i in 0..j {
                let rij = basis[i].dot(&w);
                r[i][j] = rij;
                w = w.sub(&basis[i].scale(rij));
            }
            let rjj = w.norm();
            if rjj == 0.0 || !rjj.is_finite() {
                return Err(GeometryError::DegenerateSimplex);
            }
            r[j][j] = rjj;
            basis[j] = w.scale(1.0 / rjj);
        }

        let frame = Self {
            k,
            origin,
            basis,
            r,
            diameter,
        };
        if k > 0 && frame.normalized_volume() < DEGENERACY_THRESHOLD {
            return Err(GeometryError::DegenerateSimplex);
        }
        Ok(frame)
    }

    /// `k! * volume / diameter^k`; at most 1 and 0 for a flat simplex.
    fn normalized_volume(&self) -> f64 {
        (0..self.k)
            .map(|j| self.r[j][j] / self.diameter)
            .product()
    }

    fn volume(&self) -> f64 {
        let det: f64 = (0..self.k).map(|j| self.r[j][j]).product();
        det / factorial(self.k)
    }

    /// Coordinates of vertex `j` in the frame basis (vertex 0 is the origin).
    fn local_vertex(&self, j: usize) -> Point {
        let mut p = Point::origin(self.k.max(1));
        if j > 0 {
            for i in 0..j {
                p.coords[i] = self.r[i][j - 1];
            }
        }
        p
    }

    /// Solves the perpendicular-bisector system `2 x . e_j = |e_j|^2` in
    /// local coordinates by forward substitution on `R^T`.
    fn local_circumcenter(&self) -> Point {
        let mut x = Point::origin(self.k.max(1));
        for j in 0..self.k {
            let sq: f64 = (0..=j).map(|i| self.r[i][j] * self.r[i][j]).sum();
            let mut rhs = 0.5 * sq;
            for i in 0..j {
                rhs -= self.r[i][j] * x.coords[i];
            }
            x.coords[j] = rhs / self.r[j][j];
        }
        x
    }

    fn to_ambient(&self, local: &Point) -> Point {
        let mut p = self.origin;
        for i in 0..self.k {
            p = p.add(&self.basis[i].scale(local.coords[i]));
        }
        p
    }

    /// Barycentric coordinates of a local point, vertex 0 first.
    fn barycentric(&self, local: &Point) -> [f64; MAX_DIM + 1] {
        let mut lambda = [0.0; MAX_DIM + 1];
        for j in (0..self.k).rev() {
            let mut rhs = local.coords[j];
            for l in j + 1..self.k {
                rhs -= self.r[j][l] * lambda[l + 1];
            }
            lambda[j + 1] = rhs / self.r[j][j];
        }
        lambda[0] = 1.0 - lambda[1..=self.k].iter().sum::<f64>();
        lambda
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Circumcenter of a `k`-simplex together with its circumradius.
///
/// The returned center lies in the affine hull of the vertices. A
/// single vertex is its own circumcenter with radius 0.
pub fn circumcenter(vertices: &[Point]) -> Result<Circumsphere, GeometryError> {
    let frame = Frame::new(vertices)?;
    let local = frame.local_circumcenter();
    let radius = if frame.k == 0 { 0.0 } else { local.norm() };
    Ok(Circumsphere {
        center: frame.to_ambient(&local),
        radius,
    })
}

/// `k! * volume / diameter^k` for a `k`-simplex, or 0 when it has no
/// well-defined frame at all.
pub fn normalized_volume(vertices: &[Point]) -> f64 {
    let count = vertices.len();
    if count < 2 || count > MAX_DIM + 1 {
        return 0.0;
    }
    let ambient = vertices[0].dim();
    if count - 1 > ambient {
        return 0.0;
    }
    // Recompute without the threshold so callers can inspect small values.
    let origin = vertices[0];
    let mut diameter: f64 = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            diameter = diameter.max(a.distance(b));
        }
    }
    if diameter == 0.0 {
        return 0.0;
    }
    let mut basis: Vec<Point> = Vec::with_capacity(count - 1);
    let mut product = 1.0;
    for v in &vertices[1..] {
        let mut w = v.sub(&origin);
        for q in &basis {
            w = w.sub(&q.scale(q.dot(&w)));
        }
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        product *= n / diameter;
        basis.push(w.scale(1.0 / n));
    }
    product
}

/// Unsigned `k`-volume of a simplex; 0 for a degenerate one.
pub fn volume(vertices: &[Point]) -> f64 {
    Frame::new(vertices).map(|f| f.volume()).unwrap_or(0.0)
}

/// Determinant of the leading `n x n` block, by Gaussian elimination with
/// partial pivoting.
fn determinant(mut a: [[f64; MAX_DIM]; MAX_DIM], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    det
}

/// Sign of the orientation determinant of `facet + [p]`, all points in an
/// `n`-dimensional space where `facet` has `n` vertices.
fn orientation_sign(facet: &[Point], p: &Point) -> f64 {
    let n = facet.len();
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    let base = facet[0];
    for (row, v) in facet[1..].iter().chain(std::iter::once(p)).enumerate() {
        let d = v.sub(&base);
        m[row][..n].copy_from_slice(&d.coords()[..n]);
    }
    let det = determinant(m, n);
    if det > 0.0 {
        1.0
    } else if det < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Derived quantities of an `n`-simplex: circumcenter, circumradius and the
/// signed height of the circumcenter above each facet.
///
/// For a degenerate simplex the circumcenter is at infinity; the stored
/// values are then placeholders (centroid, unit radius, heights of -1)
/// chosen so that every `h_i / R` evaluates to exactly -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexGeometry {
    pub circumcenter: Point,
    pub circumradius: f64,
    heights: [f64; MAX_DIM + 1],
    count: usize,
    pub degenerate: bool,
}

impl SimplexGeometry {
    /// Computes the geometry of a simplex with `n + 1 >= 2` vertices.
    ///
    /// Fails only for malformed input; degeneracy is reported through
    /// [`SimplexGeometry::degenerate`].
    pub fn new(vertices: &[Point]) -> Result<Self, GeometryError> {
        let count = vertices.len();
        if count < 2 || count > MAX_DIM + 1 {
            return Err(GeometryError::InvalidVertexCount(count));
        }
        match signed_heights(vertices) {
            Ok((sphere, heights)) => Ok(Self {
                circumcenter: sphere.center,
                circumradius: sphere.radius,
                heights,
                count,
                degenerate: false,
            }),
            Err(GeometryError::DegenerateSimplex) | Err(GeometryError::DegenerateFacet(_)) => {
                let mut centroid = Point::origin(vertices[0].dim());
                for v in vertices {
                    centroid = centroid.add(v);
                }
                Ok(Self {
                    circumcenter: centroid.scale(1.0 / count as f64),
                    circumradius: 1.0,
                    heights: [-1.0; MAX_DIM + 1],
                    count,
                    degenerate: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights[..self.count]
    }

    /// `h(v_i) / R`, exactly -1 for a degenerate simplex.
    pub fn ratio(&self, i: usize) -> f64 {
        if self.degenerate {
            -1.0
        } else {
            self.heights[i] / self.circumradius
        }
    }

    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.ratio(i))
    }

    pub fn vertex_count(&self) -> usize {
        self.count
    }
}

/// Circumsphere plus all signed heights, computed in the simplex's own frame.
fn signed_heights(
    vertices: &[Point],
) -> Result<(Circumsphere, [f64; MAX_DIM + 1]), GeometryError> {
    let frame = Frame::new(vertices)?;
    let n = frame.k;
    let center_local = frame.local_circumcenter();
    let sphere = Circumsphere {
        center: frame.to_ambient(&center_local),
        radius: center_local.norm(),
    };

    let mut local = [Point::origin(n); MAX_DIM + 1];
    for (j, slot) in local.iter_mut().enumerate().take(n + 1) {
        *slot = frame.local_vertex(j);
    }

    let mut heights = [0.0; MAX_DIM + 1];
    let mut facet = [Point::origin(n); MAX_DIM];
    for i in 0..=n {
        let mut len = 0;
        for (j, p) in local.iter().enumerate().take(n + 1) {
            if j != i {
                facet[len] = *p;
                len += 1;
            }
        }
        let facet = &facet[..len];
        let facet_center = match Frame::new(facet) {
            Ok(f) => f.to_ambient(&f.local_circumcenter()),
            Err(GeometryError::DegenerateSimplex) => {
                return Err(GeometryError::DegenerateFacet(i))
            }
            Err(e) => return Err(e),
        };
        let magnitude = center_local.distance(&facet_center);
        let sign = orientation_sign(facet, &center_local) * orientation_sign(facet, &local[i]);
        heights[i] = sign * magnitude;
    }
    Ok((sphere, heights))
}

/// Signed distance from the circumcenter to the hyperplane of the facet
/// opposite `vertex`; positive when the circumcenter is on the same side as
/// the vertex.
pub fn signed_height(vertex: usize, vertices: &[Point]) -> Result<f64, GeometryError> {
    if vertex >= vertices.len() {
        return Err(GeometryError::VertexIndex {
            index: vertex,
            count: vertices.len(),
        });
    }
    if vertices.len() < 2 {
        return Err(GeometryError::InvalidVertexCount(vertices.len()));
    }
    signed_heights(vertices).map(|(_, h)| h[vertex])
}

/// Outcome of the equatorial-ball characterization of well-centeredness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquatorialBall {
    /// Every vertex lies strictly outside the equatorial ball of its
    /// opposite facet.
    pub strictly_outside: bool,
    /// `min_i |dist(v_i, c(facet_i)) - R(facet_i)| / R(simplex)`.
    pub margin: f64,
}

/// Tests each vertex against the ball centered at the opposite facet's
/// circumcenter with the facet's circumradius.
pub fn equatorial_ball(vertices: &[Point]) -> Result<EquatorialBall, GeometryError> {
    let radius = circumcenter(vertices)?.radius;
    let mut strictly_outside = true;
    let mut margin = f64::INFINITY;
    let mut facet = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        facet.clear();
        facet.extend(
            vertices
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p),
        );
        let ball = match circumcenter(&facet) {
            Ok(s) => s,
            Err(GeometryError::DegenerateSimplex) => return Err(GeometryError::DegenerateFacet(i)),
            Err(e) => return Err(e),
        };
        let d = v.distance(&ball.center);
        if d <= ball.radius {
            strictly_outside = false;
        }
        margin = margin.min((d - ball.radius).abs() / radius);
    }
    Ok(EquatorialBall {
        strictly_outside,
        margin,
    })
}

/// True iff every vertex lies strictly outside the equatorial ball of its
/// opposite facet, which characterizes well-centeredness.
pub fn equatorial_ball_test(vertices: &[Point]) -> Result<bool, GeometryError> {
    equatorial_ball(vertices).map(|b| b.strictly_outside)
}

/// All `r`-element index subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// True iff the circumcenter of `face` lies strictly inside it, judged by
/// its barycentric coordinates.
pub fn contains_own_circumcenter(face: &[Point]) -> Result<bool, GeometryError> {
    let k = face.len().saturating_sub(1);
    let frame = match Frame::new(face) {
        Ok(f) => f,
        Err(GeometryError::DegenerateSimplex) => return Err(GeometryError::DegenerateFace(k)),
        Err(e) => return Err(e),
    };
    let lambda = frame.barycentric(&frame.local_circumcenter());
    Ok(lambda[..=frame.k].iter().all(|&l| l > 0.0))
}

/// True iff every `k`-face of the simplex strictly contains its own
/// circumcenter.
pub fn is_k_well_centered(vertices: &[Point], k: usize) -> Result<bool, GeometryError> {
    let n = vertices.len().saturating_sub(1);
    if k == 0 || k > n {
        return Err(GeometryError::FaceDimension { face: k, simplex: n });
    }
    let mut face = Vec::with_capacity(k + 1);
    for subset in combinations(vertices.len(), k + 1) {
        face.clear();
        face.extend(subset.iter().map(|&i| vertices[i]));
        if !contains_own_circumcenter(&face)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Interior angles of a triangle, in radians, at each of its vertices.
///
/// Collinear vertices give angles of 0 and pi. A vertex that coincides with
/// another gets angle 0 and the remaining vertex takes pi; three coincident
/// vertices give `(0, 0, pi)`.
pub fn vertex_angles(triangle: &[Point; 3]) -> [f64; 3] {
    let [a, b, c] = triangle;
    let coincident = [a == b || a == c, a == b || b == c, a == c || b == c];
    if coincident.iter().any(|&x| x) {
        let mut angles = [0.0; 3];
        match coincident.iter().position(|&x| !x) {
            Some(free) => angles[free] = std::f64::consts::PI,
            None => angles[2] = std::f64::consts::PI,
        }
        return angles;
    }
    [
        angle_between(&b.sub(a), &c.sub(a)),
        angle_between(&c.sub(b), &a.sub(b)),
        angle_between(&a.sub(c), &b.sub(c)),
    ]
}

fn angle_between(u: &Point, v: &Point) -> f64 {
    let dot = u.dot(v);
    let cross = match u.dim() {
        2 => (u.coords[0] * v.coords[1] - u.coords[1] * v.coords[0]).abs(),
        3 => {
            let [ux, uy, uz, _] = u.coords;
            let [vx, vy, vz, _] = v.coords;
            let c = Point::xyz(uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx);
            c.norm()
        }
        _ => (u.dot(u) * v.dot(v) - dot * dot).max(0.0).sqrt(),
    };
    cross.atan2(dot)
}

/// Inradius `n * volume / (sum of facet volumes)`.
pub fn inradius(vertices: &[Point]) -> Result<f64, GeometryError> {
    let frame = Frame::new(vertices)?;
    let n = frame.k;
    if n == 0 {
        return Err(GeometryError::InvalidVertexCount(vertices.len()));
    }
    let mut facet_sum = 0.0;
    let mut facet = Vec::with_capacity(n);
    for i in 0..=n {
        facet.clear();
        facet.extend(
            vertices
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p),
        );
        facet_sum += if n == 1 {
            1.0
        } else {
            Frame::new(&facet)
                .map_err(|_| GeometryError::DegenerateFacet(i))?
                .volume()
        };
    }
    Ok(n as f64 * frame.volume() / facet_sum)
}

/// Signed area (2D) or signed volume (3D) of a full-dimensional simplex.
/// Positive for counterclockwise triangles and right-handed tetrahedra.
pub fn signed_volume(vertices: &[Point]) -> f64 {
    let n = vertices.len() - 1;
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (row, v) in vertices[1..].iter().enumerate() {
        let d = v.sub(&vertices[0]);
        m[row][..n].copy_from_slice(&d.coords()[..n]);
    }
    determinant(m, n) / factorial(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn equilateral() -> Vec<Point> {
        vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(0.5, 3f64.sqrt() / 2.0),
        ]
    }

    fn regular_tet() -> Vec<Point> {
        vec![
            Point::xyz(1.0, 1.0, 1.0),
            Point::xyz(1.0, -1.0, -1.0),
            Point::xyz(-1.0, 1.0, -1.0),
            Point::xyz(-1.0, -1.0, 1.0),
        ]
    }

    fn right() -> Vec<Point> {
        vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn circumcenter_of_segment_is_midpoint() {
        let s = circumcenter(&[Point::xy(0.0, 0.0), Point::xy(4.0, 0.0)]).unwrap();
        assert!(close(s.center.coords()[0], 2.0, 1e-15));
        assert!(close(s.center.coords()[1], 0.0, 1e-15));
        assert!(close(s.radius, 2.0, 1e-15));
    }

    #[test]
    fn circumcenter_of_right_triangle_is_hypotenuse_midpoint() {
        let s = circumcenter(&[Point::xy(0.0, 0.0), Point::xy(2.0, 0.0), Point::xy(0.0, 2.0)])
            .unwrap();
        assert!(close(s.center.coords()[0], 1.0, 1e-14));
        assert!(close(s.center.coords()[1], 1.0, 1e-14));
        assert!(close(s.radius, 2f64.sqrt(), 1e-14));
    }

    #[test]
    fn circumcenter_of_regular_tet_is_origin() {
        let s = circumcenter(&regular_tet()).unwrap();
        for c in s.center.coords() {
            assert!(c.abs() < 1e-14);
        }
        assert!(close(s.radius, 3f64.sqrt(), 1e-14));
    }

    #[test]
    fn triangle_in_space_has_center_in_its_plane() {
        let tri = [
            Point::xyz(1.0, 0.0, 0.0),
            Point::xyz(0.0, 1.0, 0.0),
            Point::xyz(0.0, 0.0, 1.0),
        ];
        let s = circumcenter(&tri).unwrap();
        for c in s.center.coords() {
            assert!(close(*c, 1.0 / 3.0, 1e-15));
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        assert_eq!(circumcenter(&pts), Err(GeometryError::DegenerateSimplex));
        let g = SimplexGeometry::new(&pts).unwrap();
        assert!(g.degenerate);
        assert!(g.ratios().all(|r| r == -1.0));
    }

    #[test]
    fn nearly_flat_simplex_is_degenerate() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.5, 1e-13)];
        assert!(normalized_volume(&pts) < DEGENERACY_THRESHOLD);
        assert!(SimplexGeometry::new(&pts).unwrap().degenerate);
    }

    #[test]
    fn too_many_vertices_is_rejected() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0), Point::xy(1.0, 1.0)];
        assert!(matches!(
            circumcenter(&pts),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn equilateral_heights_are_half_radius() {
        let g = SimplexGeometry::new(&equilateral()).unwrap();
        for r in g.ratios() {
            assert!(close(r, 0.5, 1e-14));
        }
    }

    #[test]
    fn right_angle_vertex_has_zero_height() {
        let h = signed_height(0, &right()).unwrap();
        assert!(h.abs() < 1e-15);
    }

    #[test]
    fn obtuse_vertex_has_negative_height() {
        let tri = [Point::xy(0.0, 0.0), Point::xy(4.0, 0.0), Point::xy(2.0, 0.5)];
        // Bisector of (0,0)-(4,0) is x = 2; bisector of (0,0)-(2,0.5) passes
        // through (1, 0.25) with normal (2, 0.5), so 2x + 0.5y = 2.125 gives
        // y = -3.75 at x = 2. The apex is above the base, the center below.
        let center = Point::xy(2.0, -3.75);
        let s = circumcenter(&tri).unwrap();
        assert!(s.center.distance(&center) < 1e-13);
        let h = signed_height(2, &tri).unwrap();
        assert!(h < 0.0);
        assert!(close(h, -3.75, 1e-13));
    }

    #[test]
    fn signed_height_rejects_bad_index() {
        assert!(matches!(
            signed_height(3, &right()),
            Err(GeometryError::VertexIndex { .. })
        ));
    }

    #[test]
    fn equatorial_ball_examples() {
        assert!(equatorial_ball_test(&equilateral()).unwrap());
        assert!(!equatorial_ball_test(&right()).unwrap());
        assert!(equatorial_ball_test(&regular_tet()).unwrap());
    }

    #[test]
    fn well_centered_examples() {
        for k in 1..=3 {
            assert!(is_k_well_centered(&regular_tet(), k).unwrap());
        }
        assert!(!is_k_well_centered(&right(), 2).unwrap());
        assert!(is_k_well_centered(&right(), 1).unwrap());
        let seg = [Point::xyz(0.3, 1.0, 2.0), Point::xyz(-4.0, 0.5, 1.0)];
        assert!(is_k_well_centered(&seg, 1).unwrap());
        assert!(matches!(
            is_k_well_centered(&right(), 3),
            Err(GeometryError::FaceDimension { .. })
        ));
    }

    #[test]
    fn degenerate_face_is_reported() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        assert_eq!(is_k_well_centered(&pts, 2), Err(GeometryError::DegenerateFace(2)));
    }

    #[test]
    fn angle_examples() {
        let a = vertex_angles(&[equilateral()[0], equilateral()[1], equilateral()[2]]);
        for x in a {
            assert!(close(x, FRAC_PI_3, 1e-15));
        }
        let a = vertex_angles(&[right()[0], right()[1], right()[2]]);
        assert!(close(a[0], FRAC_PI_2, 1e-15));
        assert!(close(a[1], FRAC_PI_4, 1e-15));
        assert!(close(a[2], FRAC_PI_4, 1e-15));
        let a = vertex_angles(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)]);
        assert_eq!(a, [0.0, PI, 0.0]);
    }

    #[test]
    fn coincident_vertices_get_zero_angle() {
        let p = Point::xy(1.0, 1.0);
        let a = vertex_angles(&[p, Point::xy(3.0, 0.0), p]);
        assert_eq!(a, [0.0, PI, 0.0]);
        let a = vertex_angles(&[p, p, p]);
        assert_eq!(a.iter().sum::<f64>(), PI);
    }

    #[test]
    fn inradius_examples() {
        let side2 = [Point::xy(0.0, 0.0), Point::xy(2.0, 0.0), Point::xy(1.0, 3f64.sqrt())];
        assert!(close(inradius(&side2).unwrap(), 1.0 / 3f64.sqrt(), 1e-14));
        let tet = regular_tet();
        let ratio = inradius(&tet).unwrap() / circumcenter(&tet).unwrap().radius;
        assert!(close(ratio, 1.0 / 3.0, 1e-14));
        let tri = [Point::xy(0.0, 0.0), Point::xy(3.0, 0.0), Point::xy(0.0, 4.0)];
        assert!(close(inradius(&tri).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn signed_volume_orientation() {
        assert!(signed_volume(&right()) > 0.0);
        let cw = [right()[0], right()[2], right()[1]];
        assert!(signed_volume(&cw) < 0.0);
        assert!(close(signed_volume(&regular_tet()).abs(), 8.0 / 3.0, 1e-14));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 1).len(), 3);
    }
}
