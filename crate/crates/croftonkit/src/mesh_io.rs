//! Triangle-mesh readers and writers for the OFF and Wavefront OBJ formats.
//!
//! Only triangular faces are accepted. Parse errors carry the 1-based
//! line number of the offending line (one past the last line for a
//! truncated file).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use croftonkit_core::geom::MeshTopology;
use croftonkit_core::TriangleMesh;

use crate::error::{CliError, CliResult};

/// A mesh with its edge topology and any warnings about it.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    pub topology: MeshTopology,
    pub warnings: Vec<String>,
}

impl LoadedMesh {
    /// Wraps a mesh, computing its topology and warnings.
    pub fn from_mesh(mesh: TriangleMesh) -> Self {
        let topology = mesh.topology();
        let mut warnings = Vec::new();
        if !topology.boundary_edges.is_empty() {
            warnings.push(format!(
                "mesh is open: {} boundary edges; chord estimators are unavailable",
                topology.boundary_edges.len()
            ));
        }
        if !topology.nonmanifold_edges.is_empty() {
            warnings.push(format!("mesh has {} non-manifold edges", topology.nonmanifold_edges.len()));
        }
        Self { mesh, topology, warnings }
    }

    pub fn is_closed(&self) -> bool {
        self.topology.is_closed_manifold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }
}

/// Reads a mesh, choosing the format from the file extension.
pub fn load_mesh(path: &Path) -> CliResult<LoadedMesh> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| CliError::usage(format!("{}: unknown mesh format (expected .off or .obj)", path.display())))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_mesh(&text, format, path)
}

/// Parses mesh text; `path` only labels error messages.
pub fn parse_mesh(text: &str, format: MeshFormat, path: &Path) -> CliResult<LoadedMesh> {
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(text, path)?,
        MeshFormat::Obj => parse_obj(text, path)?,
    };
    let mesh = TriangleMesh::new(vertices, faces).map_err(|e| CliError::Parse {
        path: path.into(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(LoadedMesh::from_mesh(mesh))
}

type RawMesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self { path: path.into(), inner: text.lines().enumerate(), last: 0 }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { path: self.path.clone(), line, message: message.into() }
    }

    /// Next line with content after stripping `#` comments, as
    /// (line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let body = line.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }

    fn require(&mut self, what: &str) -> CliResult<(usize, Vec<&'a str>)> {
        self.next_tokens()
            .ok_or_else(|| self.error(self.last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn number<T: std::str::FromStr>(lines: &Lines, line: usize, token: &str, what: &str) -> CliResult<T> {
    token.parse().map_err(|_| lines.error(line, format!("invalid {what} `{token}`")))
}

fn parse_off(text: &str, path: &Path) -> CliResult<RawMesh> {
    let mut lines = Lines::new(text, path);
    let (mut line, mut tokens) = lines.require("OFF header")?;
    if tokens[0] == "OFF" {
        tokens.remove(0);
        if tokens.is_empty() {
            (line, tokens) = lines.require("vertex, face and edge counts")?;
        }
    } else if tokens[0].ends_with("OFF") {
        return Err(lines.error(line, format!("unsupported OFF variant `{}`", tokens[0])));
    }
    if tokens.len() < 2 {
        return Err(lines.error(line, "expected vertex, face and edge counts"));
    }
    let nv: usize = number(&lines, line, tokens[0], "vertex count")?;
    let nf: usize = number(&lines, line, tokens[1], "face count")?;
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, t) = lines.require(&format!("vertex {} of {nv}", k + 1))?;
        if t.len() < 3 {
            return Err(lines.error(line, "vertex needs three coordinates"));
        }
        vertices.push([
            number(&lines, line, t[0], "coordinate")?,
            number(&lines, line, t[1], "coordinate")?,
            number(&lines, line, t[2], "coordinate")?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, t) = lines.require(&format!("face {} of {nf}", k + 1))?;
        let count: usize = number(&lines, line, t[0], "face size")?;
        if count != 3 {
            return Err(lines.error(line, format!("only triangles are supported, found a {count}-gon")));
        }
        if t.len() < 4 {
            return Err(lines.error(line, "triangle needs three vertex indices"));
        }
        let mut face = [0usize; 3];
        for (slot, token) in face.iter_mut().zip(&t[1..4]) {
            *slot = number(&lines, line, token, "vertex index")?;
            if *slot >= nv {
                return Err(lines.error(line, format!("vertex index {slot} out of range (0..{nv})")));
            }
        }
        faces.push(face);
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(lines.error(line, "unexpected content after the last face"));
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str, path: &Path) -> CliResult<RawMesh> {
    let mut lines = Lines::new(text, path);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    while let Some((line, t)) = lines.next_tokens() {
        match t[0] {
            "v" => {
                if t.len() < 4 {
                    return Err(lines.error(line, "vertex needs three coordinates"));
                }
                vertices.push([
                    number(&lines, line, t[1], "coordinate")?,
                    number(&lines, line, t[2], "coordinate")?,
                    number(&lines, line, t[3], "coordinate")?,
                ]);
            }
            "f" => {
                if t.len() != 4 {
                    return Err(lines.error(line, format!("only triangles are supported, found {} vertices", t.len() - 1)));
                }
                let mut face = [0usize; 3];
                for (slot, token) in face.iter_mut().zip(&t[1..]) {
                    // `v`, `v/vt`, `v//vn` or `v/vt/vn`; negative indices count back
                    let index: i64 = number(&lines, line, token.split('/').next().unwrap_or(""), "vertex index")?;
                    let n = vertices.len() as i64;
                    let resolved = if index > 0 { index - 1 } else { n + index };
                    if index == 0 || !(0..n).contains(&resolved) {
                        return Err(lines.error(line, format!("vertex index {index} out of range")));
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            // normals, texture coordinates, groups, materials, smoothing, ...
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Serializes a mesh as OFF.
pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut out = format!("OFF\n{} {} 0\n", mesh.vertex_count(), mesh.face_count());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

/// Serializes a mesh as OBJ (1-based indices).
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn off(text: &str) -> CliResult<LoadedMesh> {
        parse_mesh(text, MeshFormat::Off, Path::new("test.off"))
    }

    #[test]
    fn round_trips() {
        let cube = TriangleMesh::unit_cube();
        let back = off(&write_off(&cube)).unwrap();
        assert_eq!(back.mesh, cube);
        let back = parse_mesh(&write_obj(&cube), MeshFormat::Obj, Path::new("c.obj")).unwrap();
        assert_eq!(back.mesh, cube);
        assert!(back.is_closed() && back.warnings.is_empty());
    }

    #[test]
    fn header_and_comments() {
        let m = off("# tetra\nOFF 4 4 6\n0 0 0\n1 0 0 # x\n0 1 0\n\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n").unwrap();
        assert_eq!(m.mesh.face_count(), 4);
        assert!(m.is_closed());
    }

    #[test]
    fn errors_name_lines() {
        let e = off("OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 8, .. }), "{e}");
        assert!(e.to_string().contains("face 2 of 4"));
        let e = off("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 4, .. }), "{e}");
        let e = off("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 2 3\n").unwrap_err();
        assert!(e.to_string().contains("only triangles"));
        let e = parse_mesh("v 0 0 0\nv 1 0 0\nf 1 2 3\n", MeshFormat::Obj, Path::new("a.obj")).unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 3, .. }));
    }

    #[test]
    fn open_meshes_warn() {
        let m = off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert!(!m.is_closed());
        assert!(m.warnings[0].contains("open"));
    }

    #[test]
    fn obj_index_forms() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\nf 1//1 2//1 3//1\nf 1/1/1 2/1/1 4/1/1\nf -4 -2 -1\nf 2 3 4\n";
        let m = parse_mesh(text, MeshFormat::Obj, Path::new("t.obj")).unwrap();
        assert_eq!(m.mesh.faces()[2], [0, 2, 3]);
        assert!(m.is_closed());
    }
}
