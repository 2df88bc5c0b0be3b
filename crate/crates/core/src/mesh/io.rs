//! Plain-text mesh files:
//!
//! ```text
//! mesh 2
//! vertices <count>
//! x y
//! ...
//! cells <count>
//! i j k
//! ...
//! ```
//!
//! Coordinates are written with 17 significant digits so that reading a
//! written file restores every coordinate bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{MeshError, Point, SimplicialMesh};

pub fn write_mesh<W: Write>(mesh: &SimplicialMesh, mut out: W) -> Result<(), MeshError> {
    let mut s = String::new();
    writeln!(s, "mesh 2").unwrap();
    writeln!(s, "vertices {}", mesh.num_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e}", v[0], v[1]).unwrap();
    }
    writeln!(s, "cells {}", mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_mesh_file(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    write_mesh(mesh, std::io::BufWriter::new(file))
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<SimplicialMesh, MeshError> {
    read_mesh(std::fs::File::open(path)?)
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_content(&mut self) -> Result<(usize, String), MeshError> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if !t.is_empty() {
                return Ok((self.line, t.to_string()));
            }
        }
        Err(MeshError::Parse { line: self.line + 1, message: "unexpected end of file".into() })
    }

    fn header(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let (line, text) = self.next_content()?;
        let mut it = text.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(MeshError::Parse { line, message: format!("expected '{keyword} <count>'") });
        }
        let count = it
            .next()
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| MeshError::Parse { line, message: format!("missing or invalid {keyword} count") })?;
        if it.next().is_some() {
            return Err(MeshError::Parse { line, message: "trailing tokens".into() });
        }
        Ok(count)
    }
}

fn parse_fields<T: std::str::FromStr, const N: usize>(line: usize, text: &str) -> Result<[T; N], MeshError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != N {
        return Err(MeshError::Parse { line, message: format!("expected {N} values, found {}", parts.len()) });
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| MeshError::Parse { line, message: format!("cannot parse '{p}'") })?,
        );
    }
    out.try_into().map_err(|_| MeshError::Parse { line, message: "arity".into() })
}

pub fn read_mesh<R: Read>(input: R) -> Result<SimplicialMesh, MeshError> {
    let mut lines = Lines { inner: BufReader::new(input).lines(), line: 0 };
    let (line, head) = lines.next_content()?;
    if head.split_whitespace().collect::<Vec<_>>() != ["mesh", "2"] {
        return Err(MeshError::Parse { line, message: "expected header 'mesh 2'".into() });
    }
    let nv = lines.header("vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines.next_content()?;
        let xy: [f64; 2] = parse_fields(line, &text)?;
        if !xy.iter().all(|c| c.is_finite()) {
            return Err(MeshError::Parse { line, message: "non-finite coordinate".into() });
        }
        vertices.push(xy);
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (line, text) = lines.next_content()?;
        cells.push(parse_fields::<usize, 3>(line, &text)?);
    }
    SimplicialMesh::from_arrays(vertices, cells)
}
