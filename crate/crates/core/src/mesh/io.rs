//! Plain-text mesh format.
//!
//! ```text
//! vertices <nv> cells <nc>
//! x y          (nv lines)
//! i j k        (nc lines, 0-based vertex indices)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::Triangulation;
use crate::geometry::triangle_signed_area;
use crate::{Error, Result, Vec2};

fn import_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Import { line, msg: msg.into() }
}

/// Reads a mesh file. Clockwise cells are reoriented with a warning.
pub fn import_mesh(path: impl AsRef<Path>) -> Result<Triangulation> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_mesh(&text)
}

/// Parses the text mesh format.
pub fn parse_mesh(text: &str) -> Result<Triangulation> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| import_err(0, "empty mesh file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (nv, nc) = match tokens.as_slice() {
        ["vertices", nv, "cells", nc] => (
            nv.parse::<usize>().map_err(|_| import_err(hline, "bad vertex count"))?,
            nc.parse::<usize>().map_err(|_| import_err(hline, "bad cell count"))?,
        ),
        _ => return Err(import_err(hline, "expected header `vertices <nv> cells <nc>`")),
    };
    if nc == 0 {
        return Err(import_err(hline, "mesh has no cells"));
    }

    let mut vertices = Vec::with_capacity(nv.min(1 << 16));
    for idx in 0..nv {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| import_err(0, format!("missing vertex {idx} of {nv}")))?;
        let vals = parse_fields::<f64>(ln, line, 2)?;
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(import_err(ln, "non-finite vertex coordinate"));
        }
        vertices.push(Vec2::new(vals[0], vals[1]));
    }

    let mut cells = Vec::with_capacity(nc.min(1 << 16));
    let mut cell_lines = Vec::with_capacity(nc.min(1 << 16));
    let mut seen = HashSet::new();
    let mut used = vec![false; nv];
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for idx in 0..nc {
        let (ln, line) =
            lines.next().ok_or_else(|| import_err(0, format!("missing cell {idx} of {nc}")))?;
        let v = parse_fields::<usize>(ln, line, 3)?;
        let mut c = [v[0], v[1], v[2]];
        if let Some(&bad) = c.iter().find(|&&i| i >= nv) {
            return Err(import_err(ln, format!("vertex index {bad} out of range")));
        }
        if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
            return Err(import_err(ln, "cell repeats a vertex"));
        }
        let area = triangle_signed_area(&[vertices[c[0]], vertices[c[1]], vertices[c[2]]]);
        if area == 0.0 || !area.is_finite() {
            return Err(import_err(ln, "degenerate cell"));
        }
        if area < 0.0 {
            log::warn!("line {ln}: clockwise cell ({}, {}, {}) reoriented", c[0], c[1], c[2]);
            c.swap(1, 2);
        }
        let mut key = c;
        key.sort_unstable();
        if !seen.insert(key) {
            return Err(import_err(ln, "duplicate cell"));
        }
        for j in 0..3 {
            let (a, b) = (c[j], c[(j + 1) % 3]);
            let count = edge_count.entry((a.min(b), a.max(b))).or_insert(0);
            *count += 1;
            if *count > 2 {
                return Err(import_err(ln, format!("non-manifold edge ({}, {})", a.min(b), a.max(b))));
            }
        }
        for &i in &c {
            used[i] = true;
        }
        cells.push(c);
        cell_lines.push(ln);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(import_err(ln, "unexpected content after the last cell"));
    }
    if let Some(i) = used.iter().position(|&u| !u) {
        return Err(import_err(0, format!("dangling vertex {i}")));
    }
    Triangulation::new(vertices, cells).map_err(|e| match e {
        Error::InvalidMesh(msg) => import_err(0, msg),
        other => other,
    })
}

fn parse_fields<T: std::str::FromStr>(ln: usize, line: &str, n: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != n {
        return Err(import_err(ln, format!("expected {n} fields, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| import_err(ln, format!("cannot parse `{f}`"))))
        .collect()
}

/// Serializes a triangulation in the text format; coordinates round-trip.
pub fn write_mesh(tri: &Triangulation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vertices {} cells {}", tri.num_vertices(), tri.num_cells());
    for v in &tri.vertices {
        let _ = writeln!(out, "{:?} {:?}", v.x, v.y);
    }
    for c in &tri.cells {
        let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
    }
    out
}
