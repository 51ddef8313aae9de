use crate::mesh::{MeshClassification, Triangulation};
use crate::Side;

/// Unknown blocks in global order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Flux(Side),
    Potential(Side),
}

/// Global numbering of the doubled spaces, laid out `[p1 | p2 | u1 | u2]`.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// Per side and edge: index of the flux moment; the weighted moment
    /// follows at `+1`.
    pub edge_dofs: [Vec<Option<usize>>; 2],
    pub cell_dofs: [Vec<Option<usize>>; 2],
    /// Start of `p1, p2, u1, u2` and the total size.
    pub offsets: [usize; 5],
}

impl DofMap {
    pub fn total_dofs(&self) -> usize {
        self.offsets[4]
    }

    pub fn block_range(&self, block: Block) -> std::ops::Range<usize> {
        let b = match block {
            Block::Flux(s) => s.index(),
            Block::Potential(s) => 2 + s.index(),
        };
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn flux_range(&self) -> std::ops::Range<usize> {
        self.offsets[0]..self.offsets[2]
    }

    pub fn potential_range(&self) -> std::ops::Range<usize> {
        self.offsets[2]..self.offsets[4]
    }

    pub fn cell_dof(&self, side: Side, cell: usize) -> Option<usize> {
        self.cell_dofs[side.index()][cell]
    }

    /// Global indices of the six local flux functions of `cell` on `side`,
    /// matching the oriented local basis.
    pub fn flux_dofs(&self, tri: &Triangulation, side: Side, cell: usize) -> Option<[usize; 6]> {
        let map = &self.edge_dofs[side.index()];
        let mut out = [0; 6];
        for (j, &e) in tri.cell_edges[cell].iter().enumerate() {
            let base = map[e]?;
            out[2 * j] = base;
            out[2 * j + 1] = base + 1;
        }
        Some(out)
    }
}

/// Numbers edge DOFs by edge id and cell DOFs by cell id, block by block.
pub fn build_dofmap(tri: &Triangulation, class: &MeshClassification) -> DofMap {
    let mut offsets = [0usize; 5];
    let mut next = 0usize;
    let mut edge_dofs = [vec![None; tri.num_edges()], vec![None; tri.num_edges()]];
    let mut cell_dofs = [vec![None; tri.num_cells()], vec![None; tri.num_cells()]];
    for side in Side::BOTH {
        offsets[side.index()] = next;
        let mut used = vec![false; tri.num_edges()];
        for &k in class.submesh(side) {
            for &e in &tri.cell_edges[k] {
                used[e] = true;
            }
        }
        for (e, _) in used.iter().enumerate().filter(|(_, &u)| u) {
            edge_dofs[side.index()][e] = Some(next);
            next += 2;
        }
    }
    for side in Side::BOTH {
        offsets[2 + side.index()] = next;
        for &k in class.submesh(side) {
            cell_dofs[side.index()][k] = Some(next);
            next += 1;
        }
    }
    offsets[4] = next;
    DofMap { edge_dofs, cell_dofs, offsets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CutOptions, LevelSet};
    use crate::mesh::{build_structured, classify, parse_mesh, Rect};

    #[test]
    fn no_interface_count() {
        let t = build_structured(2, Rect::REFERENCE).unwrap();
        let c = classify(&t, &LevelSet::circle(9.0, 9.0, 1.0), &CutOptions::default()).unwrap();
        let d = build_dofmap(&t, &c);
        assert_eq!(d.total_dofs(), 40);
        assert!(d.block_range(Block::Flux(Side::One)).is_empty());
        assert!(d.block_range(Block::Potential(Side::One)).is_empty());
    }

    #[test]
    fn cut_cell_is_doubled() {
        let t = parse_mesh("vertices 4 cells 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n").unwrap();
        // The line y = x - 1/2 only crosses the lower-right cell.
        let phi = LevelSet::custom(|p| p.x - p.y - 0.5);
        let c = classify(&t, &phi, &CutOptions::default()).unwrap();
        assert_eq!(c.cut_cells, vec![0]);
        let d = build_dofmap(&t, &c);
        for side in Side::BOTH {
            assert!(d.flux_dofs(&t, side, 0).is_some());
            assert!(d.cell_dof(side, 0).is_some());
        }
        assert!(d.cell_dof(Side::Two, 1).is_none());
        // p1: 5 edges, p2: 3 edges, u1: 2 cells, u2: 1 cell.
        assert_eq!(d.total_dofs(), 2 * 5 + 2 * 3 + 2 + 1);
    }

    #[test]
    fn indices_are_a_permutation() {
        let t = build_structured(6, Rect::REFERENCE).unwrap();
        let c = classify(&t, &LevelSet::circle(0.1, 0.0, 0.45), &CutOptions::default()).unwrap();
        let d = build_dofmap(&t, &c);
        let mut seen = vec![false; d.total_dofs()];
        for side in Side::BOTH {
            for base in d.edge_dofs[side.index()].iter().flatten() {
                for i in [*base, base + 1] {
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            for i in d.cell_dofs[side.index()].iter().flatten() {
                assert!(!seen[*i]);
                seen[*i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        for side in Side::BOTH {
            for &k in c.submesh(side) {
                let dofs = d.flux_dofs(&t, side, k).unwrap();
                assert!(dofs.iter().all(|i| d.block_range(Block::Flux(side)).contains(i)));
            }
        }
    }
}
