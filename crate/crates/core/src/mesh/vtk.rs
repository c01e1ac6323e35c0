//! Legacy ASCII VTK unstructured-grid I/O with a `name = id` tag-map sidecar.

use super::{Mesh, Point, TagRegistry};
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameField};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

const VTK_HEXAHEDRON: i32 = 12;
const VTK_QUAD: i32 = 9;

/// A named point-data array.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 3]>),
    Labels(Vec<i32>),
    Frames(FrameField),
}

impl Field {
    fn len(&self) -> usize {
        match self {
            Field::Scalar(v) => v.len(),
            Field::Vector(v) => v.len(),
            Field::Labels(v) => v.len(),
            Field::Frames(f) => f.len(),
        }
    }
}

/// Ordered collection of named point-data arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldSet {
    pub fields: Vec<(String, Field)>,
}

impl FieldSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, field: Field) -> &mut Self {
        self.fields.push((name.into(), field));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        match self.get(name)? {
            Field::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn vector(&self, name: &str) -> Option<&[[f64; 3]]> {
        match self.get(name)? {
            Field::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn labels(&self, name: &str) -> Option<&[i32]> {
        match self.get(name)? {
            Field::Labels(v) => Some(v),
            _ => None,
        }
    }

    /// Rebuilds a frame field from the fiber/sheet/crossfiber arrays.
    pub fn frames(&self) -> Option<FrameField> {
        if let Some(Field::Frames(f)) = self.get("frames") {
            return Some(f.clone());
        }
        let f = self.vector("fiber")?;
        let s = self.vector("sheet")?;
        let n = self.vector("crossfiber")?;
        if f.len() != s.len() || f.len() != n.len() {
            return None;
        }
        Some(FrameField(
            (0..f.len())
                .map(|i| Frame {
                    e_l: Vector3::from(f[i]),
                    e_n: Vector3::from(n[i]),
                    e_t: Vector3::from(s[i]),
                })
                .collect(),
        ))
    }
}

/// Path of the tag-map sidecar belonging to a mesh file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("tags")
}

/// Shortest representation that parses back to the same f64.
fn num(out: &mut String, x: f64) {
    let _ = write!(out, "{x:?}");
}

/// Writes the mesh, its boundary quads and the given point data, plus the
/// tag-map sidecar.
pub fn save_fields(mesh: &Mesh, fields: &FieldSet, path: &Path) -> Result<()> {
    let n = mesh.num_nodes();
    for (name, f) in &fields.fields {
        if f.len() != n {
            return Err(Error::Dimension(format!(
                "field '{name}' has {} values but the mesh has {n} nodes",
                f.len()
            )));
        }
        if name.contains(char::is_whitespace) || name.is_empty() {
            return Err(Error::Dimension(format!("invalid field name '{name}'")));
        }
    }
    let ne = mesh.num_elements();
    let nf = mesh.facets().len();
    let mut s = String::with_capacity(64 * (n + ne + nf));
    s.push_str("# vtk DataFile Version 3.0\nldrbm mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        num(&mut s, p[0]);
        s.push(' ');
        num(&mut s, p[1]);
        s.push(' ');
        num(&mut s, p[2]);
        s.push('\n');
    }
    let _ = writeln!(s, "CELLS {} {}", ne + nf, 9 * ne + 5 * nf);
    for el in mesh.elements() {
        let _ = writeln!(
            s,
            "8 {} {} {} {} {} {} {} {}",
            el[0], el[1], el[2], el[3], el[4], el[5], el[6], el[7]
        );
    }
    for f in mesh.facets() {
        let _ = writeln!(s, "4 {} {} {} {}", f.nodes[0], f.nodes[1], f.nodes[2], f.nodes[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", ne + nf);
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_HEXAHEDRON}");
    }
    for _ in 0..nf {
        let _ = writeln!(s, "{VTK_QUAD}");
    }
    let _ = writeln!(s, "CELL_DATA {}", ne + nf);
    s.push_str("SCALARS boundary_tag int 1\nLOOKUP_TABLE default\n");
    for _ in 0..ne {
        s.push_str("-1\n");
    }
    for f in mesh.facets() {
        let _ = writeln!(s, "{}", f.tag);
    }
    if !fields.fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for (name, f) in &fields.fields {
        match f {
            Field::Scalar(v) => {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for &x in v {
                    num(&mut s, x);
                    s.push('\n');
                }
            }
            Field::Labels(v) => {
                let _ = writeln!(s, "SCALARS {name} int 1\nLOOKUP_TABLE default");
                for &x in v {
                    let _ = writeln!(s, "{x}");
                }
            }
            Field::Vector(v) => write_vectors(&mut s, name, v.iter().copied()),
            Field::Frames(fr) => {
                write_vectors(&mut s, "fiber", fr.0.iter().map(|q| q.e_l.into()));
                write_vectors(&mut s, "sheet", fr.0.iter().map(|q| q.e_t.into()));
                write_vectors(&mut s, "crossfiber", fr.0.iter().map(|q| q.e_n.into()));
            }
        }
    }
    fs::write(path, s)?;
    write_tag_map(mesh.tags(), &sidecar_path(path))
}

fn write_vectors(s: &mut String, name: &str, v: impl Iterator<Item = [f64; 3]>) {
    let _ = writeln!(s, "VECTORS {name} double");
    for x in v {
        num(s, x[0]);
        s.push(' ');
        num(s, x[1]);
        s.push(' ');
        num(s, x[2]);
        s.push('\n');
    }
}

pub fn write_tag_map(tags: &TagRegistry, path: &Path) -> Result<()> {
    let mut s = String::from("# boundary tag map: name = id\n");
    let mut pairs: Vec<(&str, i32)> = tags.iter().collect();
    pairs.sort_by_key(|p| p.1);
    for (name, id) in pairs {
        let _ = writeln!(s, "{name} = {id}");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_tag_map(path: &Path) -> Result<TagRegistry> {
    let text = fs::read_to_string(path)?;
    let mut reg = TagRegistry::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, id) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected 'name = id' in tag map, found '{raw}'"),
        })?;
        let id: i32 = id.trim().parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("invalid tag id '{}'", id.trim()),
        })?;
        reg.insert(name.trim().to_string(), id).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
    }
    Ok(reg)
}

struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    line: usize,
    col: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            lines: text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect(),
            line: 0,
            col: 0,
        }
    }

    fn line_no(&self) -> usize {
        self.lines.get(self.line).map_or(self.lines.len(), |l| l.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line_no(), msg: msg.into() }
    }

    /// Next whitespace-separated token, crossing line boundaries.
    fn next(&mut self) -> Option<&'a str> {
        while self.line < self.lines.len() {
            let l = self.lines[self.line].1;
            let rest = &l[self.col..];
            let trimmed = rest.trim_start();
            if trimmed.is_empty() {
                self.line += 1;
                self.col = 0;
                continue;
            }
            let start = self.col + (rest.len() - trimmed.len());
            let end = l[start..].find(char::is_whitespace).map_or(l.len(), |e| start + e);
            self.col = end;
            return Some(&l[start..end]);
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        self.next().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let t = self.expect(what)?;
        t.parse().map_err(|_| self.err(format!("invalid {what} '{t}'")))
    }

    /// Skips the remainder of the current line.
    fn skip_line(&mut self) {
        if self.col > 0 {
            self.line += 1;
            self.col = 0;
        }
    }

    fn raw_line(&mut self) -> Option<&'a str> {
        self.skip_line();
        let l = self.lines.get(self.line)?.1;
        self.line += 1;
        Some(l)
    }
}

/// Reads a mesh written by [`save_fields`] or any legacy VTK file following
/// the same conventions.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    Ok(load_fields(path)?.0)
}

/// Reads a mesh and all of its point-data arrays.
pub fn load_fields(path: &Path) -> Result<(Mesh, FieldSet)> {
    let text = fs::read_to_string(path)?;
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(Error::Schema(format!("missing tag map sidecar {}", side.display())));
    }
    let tags = read_tag_map(&side)?;
    parse_vtk(&text, tags)
}

fn parse_vtk(text: &str, tags: TagRegistry) -> Result<(Mesh, FieldSet)> {
    let mut t = Tokens::new(text);
    let header = t.raw_line().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(Error::Parse { line: 1, msg: "missing '# vtk DataFile' header".into() });
    }
    t.raw_line();
    let fmt = t.raw_line().unwrap_or("").trim();
    if fmt != "ASCII" {
        return Err(Error::Parse { line: 3, msg: format!("expected ASCII, found '{fmt}'") });
    }
    let mut points: Vec<Point> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<i32> = Vec::new();
    let mut cell_tags: Option<Vec<i32>> = None;
    let mut fields = FieldSet::new();
    let mut npoint_data = 0usize;
    let mut in_cell_data = false;

    while let Some(kw) = t.next() {
        match kw {
            "DATASET" => {
                let ty = t.expect("dataset type")?;
                if ty != "UNSTRUCTURED_GRID" {
                    return Err(t.err(format!("unsupported dataset '{ty}'")));
                }
            }
            "POINTS" => {
                let n: usize = t.parse("point count")?;
                t.expect("point data type")?;
                points.reserve(n);
                for _ in 0..n {
                    points.push([t.parse("coordinate")?, t.parse("coordinate")?, t.parse("coordinate")?]);
                }
            }
            "CELLS" => {
                let n: usize = t.parse("cell count")?;
                t.parse::<usize>("cell list size")?;
                for _ in 0..n {
                    let k: usize = t.parse("cell size")?;
                    let mut c = Vec::with_capacity(k);
                    for _ in 0..k {
                        c.push(t.parse("node index")?);
                    }
                    cells.push(c);
                }
            }
            "CELL_TYPES" => {
                let n: usize = t.parse("cell type count")?;
                for _ in 0..n {
                    types.push(t.parse("cell type")?);
                }
            }
            "CELL_DATA" => {
                t.parse::<usize>("cell data count")?;
                in_cell_data = true;
            }
            "POINT_DATA" => {
                npoint_data = t.parse("point data count")?;
                in_cell_data = false;
            }
            "SCALARS" => {
                let name = t.expect("array name")?.to_string();
                let ty = t.expect("array type")?;
                let line_rest = t.lines[t.line].1[t.col..].trim();
                if !line_rest.is_empty() {
                    let comps: usize = t.parse("component count")?;
                    if comps != 1 {
                        return Err(t.err("only single-component SCALARS are supported"));
                    }
                }
                if t.expect("LOOKUP_TABLE")? != "LOOKUP_TABLE" {
                    return Err(t.err("expected LOOKUP_TABLE"));
                }
                t.expect("lookup table name")?;
                let is_int = matches!(ty, "int" | "long" | "short" | "char" | "unsigned_int");
                let count = if in_cell_data { cells.len() } else { npoint_data };
                if in_cell_data {
                    let mut v = Vec::with_capacity(count);
                    for _ in 0..count {
                        v.push(parse_int_like(&mut t)?);
                    }
                    if name == "boundary_tag" {
                        cell_tags = Some(v);
                    }
                } else if is_int {
                    let mut v = Vec::with_capacity(count);
                    for _ in 0..count {
                        v.push(t.parse("integer value")?);
                    }
                    fields.push(name, Field::Labels(v));
                } else {
                    let mut v = Vec::with_capacity(count);
                    for _ in 0..count {
                        v.push(t.parse("value")?);
                    }
                    fields.push(name, Field::Scalar(v));
                }
            }
            "VECTORS" | "NORMALS" => {
                let name = t.expect("array name")?.to_string();
                t.expect("array type")?;
                let count = if in_cell_data { cells.len() } else { npoint_data };
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    v.push([t.parse("component")?, t.parse("component")?, t.parse("component")?]);
                }
                if !in_cell_data {
                    fields.push(name, Field::Vector(v));
                }
            }
            other => return Err(t.err(format!("unexpected keyword '{other}'"))),
        }
    }

    if types.len() != cells.len() {
        return Err(Error::Parse {
            line: t.line_no(),
            msg: format!("{} cells but {} cell types", cells.len(), types.len()),
        });
    }
    let cell_tags = cell_tags
        .ok_or_else(|| Error::Schema("missing integer cell-data array 'boundary_tag'".into()))?;
    let mut elements = Vec::new();
    let mut facets = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match types[i] {
            VTK_HEXAHEDRON if c.len() == 8 => {
                elements.push([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]);
            }
            VTK_QUAD if c.len() == 4 => {
                if cell_tags[i] < 0 {
                    return Err(Error::Schema(format!("boundary quad (cell {i}) has no tag")));
                }
                facets.push(([c[0], c[1], c[2], c[3]], cell_tags[i]));
            }
            ty => {
                return Err(Error::Schema(format!(
                    "cell {i}: unsupported type {ty} with {} nodes",
                    c.len()
                )))
            }
        }
    }
    if let Some(bad) = facets.iter().flat_map(|f| f.0).find(|&j| j >= points.len()) {
        return Err(Error::Geometry(format!("facet references missing node {bad}")));
    }
    let mesh = Mesh::new(points, elements, facets, tags)?;
    Ok((mesh, fields))
}

fn parse_int_like(t: &mut Tokens<'_>) -> Result<i32> {
    let tok = t.expect("cell value")?;
    if let Ok(v) = tok.parse::<i32>() {
        return Ok(v);
    }
    match tok.parse::<f64>() {
        Ok(x) if x.fract() == 0.0 => Ok(x as i32),
        _ => Err(t.err(format!("invalid integer '{tok}'"))),
    }
}
