use super::Triangulation;
use crate::geometry::cut::classify_and_cut;
use crate::geometry::{intersect_edge, CellClass, CutGeometry, CutOptions, LevelSet};
use crate::parallel::{configured_threads, map_indexed};
use crate::{Result, Side, Vec2};

/// Edge crossed by the interface, restricted to one subdomain.
#[derive(Clone, Debug, PartialEq)]
pub struct CutEdge {
    pub edge: usize,
    /// Part of the edge lying in the subdomain; positive length.
    pub segment: [Vec2; 2],
    /// Adjacent cells; the second is absent on the domain boundary.
    pub cells: (usize, Option<usize>),
}

impl CutEdge {
    pub fn length(&self) -> f64 {
        (self.segment[1] - self.segment[0]).norm()
    }
}

/// Partition of a triangulation by an interface.
#[derive(Clone, Debug)]
pub struct MeshClassification {
    pub level_set: LevelSet,
    pub options: CutOptions,
    pub cell_class: Vec<CellClass>,
    /// Cut cells in increasing order.
    pub cut_cells: Vec<usize>,
    /// Cells of the two overlapping submeshes, in increasing order.
    pub submesh: [Vec<usize>; 2],
    /// Geometry of `cut_cells[i]`.
    pub cut_geometry: Vec<CutGeometry>,
    cut_slot: Vec<Option<usize>>,
    /// Cut edges per subdomain, in increasing edge order.
    pub cut_edges: [Vec<CutEdge>; 2],
}

impl MeshClassification {
    pub fn class(&self, cell: usize) -> CellClass {
        self.cell_class[cell]
    }

    pub fn cut(&self, cell: usize) -> Option<&CutGeometry> {
        self.cut_slot[cell].map(|i| &self.cut_geometry[i])
    }

    pub fn submesh(&self, side: Side) -> &[usize] {
        &self.submesh[side.index()]
    }

    pub fn cut_edges(&self, side: Side) -> &[CutEdge] {
        &self.cut_edges[side.index()]
    }

    pub fn in_submesh(&self, cell: usize, side: Side) -> bool {
        self.cell_class[cell].in_submesh(side)
    }
}

/// Classifies every cell and builds cut geometry and cut-edge lists.
pub fn classify(tri: &Triangulation, phi: &LevelSet, opts: &CutOptions) -> Result<MeshClassification> {
    let per_cell = map_indexed(tri.num_cells(), configured_threads(), |k| {
        classify_and_cut(phi, k, &tri.triangle(k), opts)
    });
    let mut cell_class = Vec::with_capacity(tri.num_cells());
    let mut cut_cells = Vec::new();
    let mut cut_geometry = Vec::new();
    let mut cut_slot = vec![None; tri.num_cells()];
    for (k, res) in per_cell.into_iter().enumerate() {
        let (class, geom) = res?;
        cell_class.push(class);
        if let Some(g) = geom {
            cut_slot[k] = Some(cut_geometry.len());
            cut_cells.push(k);
            cut_geometry.push(g);
        }
    }
    let submesh = Side::BOTH.map(|side| {
        (0..tri.num_cells()).filter(|&k| cell_class[k].in_submesh(side)).collect::<Vec<_>>()
    });

    let mut cut_edges: [Vec<CutEdge>; 2] = [Vec::new(), Vec::new()];
    for (e, &[a, b]) in tri.edges.iter().enumerate() {
        let (pa, pb) = (tri.vertices[a], tri.vertices[b]);
        let (fa, fb) = (phi.eval(pa), phi.eval(pb));
        if !(fa * fb < 0.0) {
            continue;
        }
        let x = intersect_edge(phi, pa, pb)?;
        let (c0, c1) = tri.edge_cells[e];
        for side in Side::BOTH {
            let members = std::iter::once(c0).chain(c1);
            if !members.into_iter().all(|c| cell_class[c].in_submesh(side)) {
                continue;
            }
            let inside = match side {
                Side::One => if fa < 0.0 { pa } else { pb },
                Side::Two => if fa > 0.0 { pa } else { pb },
            };
            if (inside - x).norm() > 0.0 {
                cut_edges[side.index()].push(CutEdge { edge: e, segment: [inside, x], cells: (c0, c1) });
            }
        }
    }

    Ok(MeshClassification {
        level_set: phi.clone(),
        options: *opts,
        cell_class,
        cut_cells,
        submesh,
        cut_geometry,
        cut_slot,
        cut_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::classify_cell;
    use crate::mesh::{build_structured, Rect};

    #[test]
    fn no_interface() {
        let t = build_structured(4, Rect::REFERENCE).unwrap();
        let phi = LevelSet::circle(10.0, 10.0, 1.0);
        let c = classify(&t, &phi, &CutOptions::default()).unwrap();
        assert!(c.submesh(Side::One).is_empty());
        assert_eq!(c.submesh(Side::Two).len(), t.num_cells());
        assert!(c.cut_cells.is_empty());
    }

    #[test]
    fn circle_on_n8() {
        let t = build_structured(8, Rect::REFERENCE).unwrap();
        let phi = LevelSet::circle(0.0, 0.0, 1.0 / 6.0);
        let c = classify(&t, &phi, &CutOptions::default()).unwrap();
        // Containment oracle: a cell is cut iff the radius range of its
        // points straddles r0 (for cells away from the origin, vertex
        // distances bound the extremes except the nearest point).
        let r0 = 1.0 / 6.0;
        let mut expected = 0;
        for k in 0..t.num_cells() {
            let tr = t.triangle(k);
            let mut rmin = f64::INFINITY;
            let mut rmax = 0.0_f64;
            for s in 0..=40 {
                for u in 0..=(40 - s) {
                    let p = tr[0]
                        + (tr[1] - tr[0]) * (s as f64 / 40.0)
                        + (tr[2] - tr[0]) * (u as f64 / 40.0);
                    rmin = rmin.min(p.norm());
                    rmax = rmax.max(p.norm());
                }
            }
            if rmin < r0 && rmax > r0 {
                expected += 1;
            }
        }
        assert_eq!(c.cut_cells.len(), expected);
        assert!(c.cut_cells.len() < t.num_cells() / 4);
        for g in &c.cut_geometry {
            assert_eq!(g.polyline.len(), 5);
        }
        let n = t.num_cells();
        assert_eq!(c.submesh(Side::One).len() + c.submesh(Side::Two).len() - c.cut_cells.len(), n);
    }

    #[test]
    fn vertical_line_strip() {
        let n = 8;
        let t = build_structured(n, Rect::REFERENCE).unwrap();
        let phi = LevelSet::vertical_line(1.0 / 3.0);
        let c = classify(&t, &phi, &CutOptions::default()).unwrap();
        // x = 1/3 lies strictly inside column [1/4, 1/2]: both triangles of
        // every square in that column are cut.
        assert_eq!(c.cut_cells.len(), 2 * n);
        for &k in &c.cut_cells {
            let tr = t.triangle(k);
            let xmin = tr.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            assert!((xmin - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn cut_edge_invariants() {
        let t = build_structured(8, Rect::REFERENCE).unwrap();
        let phi = LevelSet::ellipse(0.1, -0.05, 0.5, 0.3);
        let c = classify(&t, &phi, &CutOptions::default()).unwrap();
        for side in Side::BOTH {
            for ce in c.cut_edges(side) {
                let [a, b] = t.edges[ce.edge];
                assert!(phi.eval(t.vertices[a]) * phi.eval(t.vertices[b]) < 0.0);
                assert!(ce.length() > 0.0);
                assert!(c.in_submesh(ce.cells.0, side));
                if let Some(c1) = ce.cells.1 {
                    assert!(c.in_submesh(c1, side));
                }
                let mid = 0.5 * (ce.segment[0] + ce.segment[1]);
                let s = phi.eval(mid);
                assert!(if side == Side::One { s < 0.0 } else { s > 0.0 });
            }
        }
        for k in 0..t.num_cells() {
            assert_eq!(c.class(k), classify_cell(&phi, &t.triangle(k)).unwrap());
        }
    }
}
