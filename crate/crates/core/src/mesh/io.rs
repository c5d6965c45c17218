//! Triangle / TetGen `.node` + `.ele` pairs and planar OFF files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use super::{MeshError, SimplicialMesh};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// Triangle `.node`/`.ele`, planar.
    Triangle,
    /// TetGen `.node`/`.ele`, three-dimensional.
    TetGen,
    /// Object File Format with `z = 0` for every vertex.
    Off,
}

impl MeshFormat {
    fn dim(self) -> usize {
        match self {
            MeshFormat::Triangle | MeshFormat::Off => 2,
            MeshFormat::TetGen => 3,
        }
    }

    /// Guesses the format from a file extension and, for `.node`/`.ele`,
    /// the dimension stored in the `.node` header.
    pub fn detect(path: &Path) -> Result<Self, MeshError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("off") | Some("OFF") => Ok(MeshFormat::Off),
            _ => {
                let node = node_ele_paths(path).0;
                let reader = BufReader::new(File::open(&node)?);
                let mut tokens = Tokens::new(reader);
                let _count = tokens.next_usize("vertex count")?;
                match tokens.next_usize("dimension")? {
                    2 => Ok(MeshFormat::Triangle),
                    3 => Ok(MeshFormat::TetGen),
                    d => Err(MeshError::Unsupported(format!("{d}-dimensional .node file"))),
                }
            }
        }
    }
}

impl FromStr for MeshFormat {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "triangle" | "triangle_node_ele" => Ok(MeshFormat::Triangle),
            "tetgen" | "tetgen_node_ele" => Ok(MeshFormat::TetGen),
            "off" => Ok(MeshFormat::Off),
            other => Err(MeshError::Unsupported(format!("mesh format '{other}'"))),
        }
    }
}

/// `foo`, `foo.node` or `foo.ele` all name the pair `foo.node` + `foo.ele`.
fn node_ele_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut node = base.clone().into_os_string();
    node.push(".node");
    let mut ele = base.into_os_string();
    ele.push(".ele");
    (node.into(), ele.into())
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<SimplicialMesh, MeshError> {
    match format {
        MeshFormat::Off => read_off(BufReader::new(File::open(path)?)),
        MeshFormat::Triangle | MeshFormat::TetGen => {
            let (node, ele) = node_ele_paths(path);
            read_node_ele(
                BufReader::new(File::open(node)?),
                BufReader::new(File::open(ele)?),
                format.dim(),
            )
        }
    }
}

/// Writes `mesh` in `format`. For `.node`/`.ele` formats `path` may name
/// either file or their common stem.
pub fn save_mesh(mesh: &SimplicialMesh, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
    if mesh.dim() != format.dim() {
        return Err(MeshError::Unsupported(format!(
            "{format:?} stores {}-dimensional meshes, this mesh is {}-dimensional",
            format.dim(),
            mesh.dim()
        )));
    }
    match format {
        MeshFormat::Off => {
            let mut w = BufWriter::new(File::create(path)?);
            write_off(mesh, &mut w)?;
            w.flush()?;
        }
        MeshFormat::Triangle | MeshFormat::TetGen => {
            let (node, ele) = node_ele_paths(path);
            let mut nw = BufWriter::new(File::create(node)?);
            let mut ew = BufWriter::new(File::create(ele)?);
            write_node_ele(mesh, &mut nw, &mut ew)?;
            nw.flush()?;
            ew.flush()?;
        }
    }
    Ok(())
}

/// Whitespace tokenizer that drops `#` comments and remembers positions.
struct Tokens<R> {
    reader: R,
    line: usize,
    buf: Vec<(usize, String)>,
    pos: usize,
    eof: bool,
}

impl<R: BufRead> Tokens<R> {
    fn new(reader: R) -> Self {
        Self {
            reader,
            line: 0,
            buf: Vec::new(),
            pos: 0,
            eof: false,
        }
    }

    /// Loads the next line that carries at least one token. Returns false
    /// at end of input.
    fn fill(&mut self) -> Result<bool, MeshError> {
        while self.pos >= self.buf.len() {
            if self.eof {
                return Ok(false);
            }
            let mut raw = String::new();
            if self.reader.read_line(&mut raw)? == 0 {
                self.eof = true;
                return Ok(false);
            }
            self.line += 1;
            let text = raw.split('#').next().unwrap_or("");
            self.buf.clear();
            self.pos = 0;
            let mut col = 0;
            for piece in text.split(|c: char| c.is_whitespace()) {
                if !piece.is_empty() {
                    self.buf.push((col + 1, piece.to_string()));
                }
                col += piece.len() + 1;
            }
        }
        Ok(true)
    }

    fn error(&self, column: usize, message: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn next_token(&mut self, what: &str) -> Result<(usize, String), MeshError> {
        if !self.fill()? {
            return Err(self.error(0, format!("unexpected end of input, expected {what}")));
        }
        let tok = self.buf[self.pos].clone();
        self.pos += 1;
        Ok(tok)
    }

    fn next_parsed<T: FromStr>(&mut self, what: &str) -> Result<T, MeshError> {
        let (col, tok) = self.next_token(what)?;
        tok.parse()
            .map_err(|_| self.error(col, format!("expected {what}, found '{tok}'")))
    }

    fn next_usize(&mut self, what: &str) -> Result<usize, MeshError> {
        self.next_parsed(what)
    }

    fn next_f64(&mut self, what: &str) -> Result<f64, MeshError> {
        let v: f64 = self.next_parsed(what)?;
        if !v.is_finite() {
            let col = self.buf[self.pos - 1].0;
            return Err(self.error(col, format!("{what} is not finite")));
        }
        Ok(v)
    }

    /// Drops whatever is left on the current line.
    fn skip_line(&mut self) {
        self.pos = self.buf.len();
    }

    /// Number of tokens still unread on the current line.
    fn remaining_on_line(&self) -> usize {
        self.buf.len().saturating_sub(self.pos)
    }

    fn column(&self) -> usize {
        self.buf.get(self.pos).map_or(0, |t| t.0)
    }
}

/// Reads a `.node` + `.ele` pair. Indices may be 0- or 1-based; the base is
/// taken from the first element number in the `.ele` file.
pub fn read_node_ele<N: BufRead, E: BufRead>(
    node: N,
    ele: E,
    dim: usize,
) -> Result<SimplicialMesh, MeshError> {
    let mut nt = Tokens::new(node);
    let nv = nt.next_usize("vertex count")?;
    let col = nt.column();
    let file_dim = nt.next_usize("dimension")?;
    if file_dim != dim {
        return Err(nt.error(col, format!("expected dimension {dim}, found {file_dim}")));
    }
    let nattr = nt.next_usize("attribute count")?;
    let nmark = nt.next_usize("boundary marker count")?;
    if nmark > 1 {
        return Err(nt.error(0, "at most one boundary marker per vertex"));
    }
    nt.skip_line();

    let mut node_ids = Vec::with_capacity(nv);
    let mut vertices = Vec::with_capacity(nv);
    let mut markers = Vec::with_capacity(if nmark == 1 { nv } else { 0 });
    let mut coords = [0.0; 3];
    for _ in 0..nv {
        node_ids.push((nt.line, nt.next_usize("vertex index")?));
        for c in coords.iter_mut().take(dim) {
            *c = nt.next_f64("coordinate")?;
        }
        for _ in 0..nattr {
            nt.next_f64("vertex attribute")?;
        }
        if nmark == 1 {
            let m: i64 = nt.next_parsed("boundary marker")?;
            markers.push(m != 0);
        }
        if nt.remaining_on_line() > 0 {
            return Err(nt.error(nt.column(), "trailing data on vertex line"));
        }
        vertices.push(Point::new(&coords[..dim]));
    }

    let mut et = Tokens::new(ele);
    let ncells = et.next_usize("element count")?;
    let col = et.column();
    let corners = et.next_usize("nodes per element")?;
    if corners != dim + 1 {
        return Err(et.error(col, format!("expected {} nodes per element, found {corners}", dim + 1)));
    }
    let eattr = et.next_usize("element attribute count")?;
    et.skip_line();

    let mut base = None;
    let mut cells = Vec::with_capacity(ncells * corners);
    for _ in 0..ncells {
        let col = et.column();
        let id = et.next_usize("element index")?;
        let b = *base.get_or_insert(id.min(1));
        if id < b {
            return Err(et.error(col, format!("element index {id} below base {b}")));
        }
        for _ in 0..corners {
            let col = et.column();
            let v = et.next_usize("vertex index")?;
            if v < b || v - b >= nv {
                return Err(MeshError::Index(format!(
                    "line {}, column {col}: vertex {v} out of range",
                    et.line
                )));
            }
            cells.push(v - b);
        }
        for _ in 0..eattr {
            et.next_f64("element attribute")?;
        }
        if et.remaining_on_line() > 0 {
            return Err(et.error(et.column(), "trailing data on element line"));
        }
    }

    let b = base.unwrap_or_else(|| node_ids.first().map_or(0, |&(_, id)| id.min(1)));
    for (i, &(line, id)) in node_ids.iter().enumerate() {
        if id != i + b {
            return Err(MeshError::Parse {
                line,
                column: 1,
                message: format!("vertex index {id}, expected {}", i + b),
            });
        }
    }

    let mesh = SimplicialMesh::new(dim, vertices, cells)?;
    if !markers.is_empty() {
        let mismatched = markers
            .iter()
            .zip(mesh.boundary_flags())
            .filter(|(m, b)| m != b)
            .count();
        if mismatched > 0 {
            warn!("{mismatched} boundary markers disagree with facet incidence; using incidence");
        }
    }
    Ok(mesh)
}

/// Writes 1-based `.node` and `.ele` files with one boundary marker column.
pub fn write_node_ele<N: Write, E: Write>(
    mesh: &SimplicialMesh,
    node: &mut N,
    ele: &mut E,
) -> Result<(), MeshError> {
    let dim = mesh.dim();
    writeln!(node, "{} {dim} 0 1", mesh.vertex_count())?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        write!(node, "{}", i + 1)?;
        for c in p.coords() {
            write!(node, " {c:?}")?;
        }
        writeln!(node, " {}", u8::from(mesh.is_boundary_vertex(i)))?;
    }
    writeln!(ele, "{} {} 0", mesh.cell_count(), dim + 1)?;
    for (c, cell) in mesh.cells().enumerate() {
        write!(ele, "{}", c + 1)?;
        for v in cell {
            write!(ele, " {}", v + 1)?;
        }
        writeln!(ele)?;
    }
    Ok(())
}

/// Reads a planar OFF file: every vertex must have `z = 0` and every face
/// must be a triangle.
pub fn read_off<R: BufRead>(reader: R) -> Result<SimplicialMesh, MeshError> {
    let mut t = Tokens::new(reader);
    let (col, header) = t.next_token("OFF header")?;
    if header != "OFF" {
        return Err(t.error(col, format!("expected 'OFF', found '{header}'")));
    }
    let nv = t.next_usize("vertex count")?;
    let nf = t.next_usize("face count")?;
    let _ne = t.next_usize("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = t.next_f64("x")?;
        let y = t.next_f64("y")?;
        let col = t.column();
        let z = t.next_f64("z")?;
        if z != 0.0 {
            return Err(t.error(col, "only planar OFF meshes (z = 0) are supported"));
        }
        vertices.push(Point::xy(x, y));
    }
    let mut cells = Vec::with_capacity(nf * 3);
    for _ in 0..nf {
        let col = t.column();
        let k = t.next_usize("face size")?;
        if k != 3 {
            return Err(t.error(col, format!("only triangular faces are supported, found {k}")));
        }
        for _ in 0..3 {
            let col = t.column();
            let v = t.next_usize("vertex index")?;
            if v >= nv {
                return Err(MeshError::Index(format!(
                    "line {}, column {col}: vertex {v} out of range",
                    t.line
                )));
            }
            cells.push(v);
        }
        // Optional per-face color.
        t.skip_line();
    }
    SimplicialMesh::new(2, vertices, cells)
}

pub fn write_off<W: Write>(mesh: &SimplicialMesh, w: &mut W) -> Result<(), MeshError> {
    if mesh.dim() != 2 {
        return Err(MeshError::Unsupported("OFF output of a 3D mesh".into()));
    }
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertex_count(), mesh.cell_count())?;
    for p in mesh.vertices() {
        let c = p.coords();
        writeln!(w, "{:?} {:?} 0", c[0], c[1])?;
    }
    for cell in mesh.cells() {
        writeln!(w, "3 {} {} {}", cell[0], cell[1], cell[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;

    const SQUARE_NODE: &str = "# unit square\n4 2 0 1\n1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n";
    const SQUARE_ELE: &str = "2 3 0\n1 1 2 3\n2 1 3 4\n";

    #[test]
    fn reads_square() {
        let m = read_node_ele(SQUARE_NODE.as_bytes(), SQUARE_ELE.as_bytes(), 2).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.cell_count(), 2);
        assert_eq!(m.interior_vertices().len(), 0);
        assert_eq!(m, square2());
    }

    #[test]
    fn zero_based_files_are_accepted() {
        let node = "4 2 0 0\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n";
        let ele = "2 3 0\n0 0 1 2\n1 0 2 3\n";
        let m = read_node_ele(node.as_bytes(), ele.as_bytes(), 2).unwrap();
        assert_eq!(m, square2());
    }

    #[test]
    fn parse_errors_report_position() {
        let node = "4 2 0 0\n1 0 0\n2 1 x\n3 1 1\n4 0 1\n";
        let err = read_node_ele(node.as_bytes(), SQUARE_ELE.as_bytes(), 2).unwrap_err();
        match err {
            MeshError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_vertex_is_an_index_error() {
        let ele = "2 3 0\n1 1 2 3\n2 1 3 5\n";
        let err = read_node_ele(SQUARE_NODE.as_bytes(), ele.as_bytes(), 2).unwrap_err();
        assert!(matches!(err, MeshError::Index(_)));
    }

    #[test]
    fn three_cells_on_a_facet_is_a_topology_error() {
        let node = "5 2 0 0\n1 0 0\n2 1 0\n3 0.5 1\n4 0.5 -1\n5 0.5 2\n";
        let ele = "3 3 0\n1 1 2 3\n2 2 1 4\n3 1 2 5\n";
        let err = read_node_ele(node.as_bytes(), ele.as_bytes(), 2).unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn reads_single_tet() {
        let node = "4 3 0 0\n1 1 1 1\n2 1 -1 -1\n3 -1 1 -1\n4 -1 -1 1\n";
        let ele = "1 4 0\n1 1 2 3 4\n";
        let m = read_node_ele(node.as_bytes(), ele.as_bytes(), 3).unwrap();
        assert_eq!(m.boundary_facets().count(), 4);
        assert!(m.boundary_flags().iter().all(|&b| b));
    }

    #[test]
    fn off_round_trip() {
        let m = hexagon_fan(Point::xy(0.1, 0.2));
        let mut buf = Vec::new();
        write_off(&m, &mut buf).unwrap();
        let back = read_off(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn off_rejects_nonplanar() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 1\n3 0 1 2\n";
        assert!(matches!(read_off(text.as_bytes()), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = save_mesh(
            &square2(),
            Path::new("/nonexistent-dir/sub/mesh.off"),
            MeshFormat::Off,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Io(_)));
    }

    #[test]
    fn format_dimension_mismatch() {
        let err = save_mesh(&single_tet(), Path::new("/tmp/x.off"), MeshFormat::Off).unwrap_err();
        assert!(matches!(err, MeshError::Unsupported(_)));
    }
}
