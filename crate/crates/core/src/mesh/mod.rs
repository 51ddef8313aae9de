//! Triangulations, edge topology and interface classification.

mod classify;
mod io;

pub use classify::{classify, CutEdge, MeshClassification};
pub use io::{import_mesh, parse_mesh, write_mesh};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::triangle_signed_area;
use crate::{Error, Result, Vec2};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    /// The square `(-1, 1)^2` used by every built-in problem.
    pub const REFERENCE: Rect = Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Conforming triangulation with edge topology.
///
/// Edges run from the lower to the higher vertex index. Local edge `j` of a
/// cell joins local vertices `j` and `j + 1 (mod 3)`.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub cell_edges: Vec<[usize; 3]>,
    /// `+1` where the cell traverses the edge from low to high index.
    pub cell_edge_signs: Vec<[f64; 3]>,
    /// First and (for interior edges) second adjacent cell.
    pub edge_cells: Vec<(usize, Option<usize>)>,
    /// Largest cell diameter.
    pub h: f64,
    pub cell_diameter: Vec<f64>,
    pub cell_area: Vec<f64>,
}

impl Triangulation {
    /// Builds the topology of counterclockwise cells.
    pub fn new(vertices: Vec<Vec2>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edges = Vec::new();
        let mut edge_cells: Vec<(usize, Option<usize>)> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        let mut cell_area = Vec::with_capacity(cells.len());
        let mut cell_diameter = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("cell {k} references a missing vertex")));
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(Error::InvalidMesh(format!("cell {k} repeats a vertex")));
            }
            let t = [vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]];
            let area = triangle_signed_area(&t);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "cell {k} is degenerate or clockwise (signed area {area:e})"
                )));
            }
            cell_area.push(area);
            cell_diameter.push((0..3).map(|j| (t[j] - t[(j + 1) % 3]).norm()).fold(0.0, f64::max));
            let mut ids = [0usize; 3];
            let mut signs = [0.0; 3];
            for j in 0..3 {
                let (a, b) = (cell[j], cell[(j + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                signs[j] = if a < b { 1.0 } else { -1.0 };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push((k, None));
                    edges.len() - 1
                });
                if edge_cells[e].0 != k {
                    match edge_cells[e].1 {
                        None => edge_cells[e].1 = Some(k),
                        Some(_) => {
                            return Err(Error::InvalidMesh(format!(
                                "non-manifold edge ({}, {}) at cell {k}",
                                key[0], key[1]
                            )))
                        }
                    }
                }
                ids[j] = e;
            }
            cell_edges.push(ids);
            cell_edge_signs.push(signs);
        }
        for (e, &(first, second)) in edge_cells.iter().enumerate() {
            if let Some(second) = second {
                let sf = sign_of(&cell_edges[first], &cell_edge_signs[first], e);
                let ss = sign_of(&cell_edges[second], &cell_edge_signs[second], e);
                if sf == ss {
                    return Err(Error::InvalidMesh(format!(
                        "cells {first} and {second} induce the same orientation on edge {e}"
                    )));
                }
            }
        }
        let h = cell_diameter.iter().copied().fold(0.0, f64::max);
        Ok(Triangulation {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            h,
            cell_diameter,
            cell_area,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle(&self, cell: usize) -> [Vec2; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_cells[edge].1.is_none()
    }

    pub fn edge_endpoints(&self, edge: usize) -> [Vec2; 2] {
        let [a, b] = self.edges[edge];
        [self.vertices[a], self.vertices[b]]
    }

    /// Local index of `edge` in `cell`.
    pub fn local_edge(&self, cell: usize, edge: usize) -> Option<usize> {
        self.cell_edges[cell].iter().position(|&e| e == edge)
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edge_cells.iter().filter(|c| c.1.is_some()).count()
    }
}

fn sign_of(edges: &[usize; 3], signs: &[f64; 3], e: usize) -> f64 {
    let j = edges.iter().position(|&x| x == e).expect("edge belongs to cell");
    signs[j]
}

/// Uniform `n x n` grid of squares on `domain`, each split along its
/// lower-left to upper-right diagonal.
pub fn build_structured(n: usize, domain: Rect) -> Result<Triangulation> {
    let (vertices, cells) = structured_parts(n, domain)?;
    Triangulation::new(vertices, cells)
}

/// Structured grid whose interior vertices are displaced uniformly within a
/// disc of radius `0.2 * spacing`, reproducibly from `seed`.
pub fn build_perturbed(n: usize, domain: Rect, seed: u64) -> Result<Triangulation> {
    let (mut vertices, cells) = structured_parts(n, domain)?;
    let spacing = (domain.width() / n as f64).min(domain.height() / n as f64);
    let radius = 0.2 * spacing;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..n {
        for i in 1..n {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            vertices[j * (n + 1) + i] += Vec2::new(r * theta.cos(), r * theta.sin());
        }
    }
    Triangulation::new(vertices, cells)
}

fn structured_parts(n: usize, domain: Rect) -> Result<(Vec<Vec2>, Vec<[usize; 3]>)> {
    if n < 2 {
        return Err(Error::Config(format!("structured mesh needs N >= 2, got {n}")));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::Config("structured mesh domain is empty".into()));
    }
    let (dx, dy) = (domain.width() / n as f64, domain.height() / n as f64);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
            let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
            vertices.push(Vec2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    Ok((vertices, cells))
}
